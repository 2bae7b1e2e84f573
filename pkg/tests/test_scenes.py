"""Scene synthesis tests: specs, suite structure, rendering, disk layout."""

import json
import math

import numpy as np
import pytest

from doa_lab.geometry import HeadModel, angle_from_itd, itd_woodworth
from doa_lab.pipeline import ground_truth_label, load_manifest, load_recording
from doa_lab.scenes import (
    TRAIN_WEIGHTS,
    SceneSpec,
    SceneSuite,
    binauralize,
    default_suite,
    load_suite_json,
    render,
    suite_from_dict,
    suite_to_dict,
    synth_speech_like,
    write_suite,
)
from doa_lab.signals import FramingParams, MonoSignal, frame_matrix
from doa_lab.timing import WeightingKind, gcc

from conftest import SAMPLE_RATE, static_scene_spec

DEG = math.pi / 180.0


class TestSceneSpecValidation:
    def test_minimal_valid(self):
        spec = static_scene_spec(30.0 * DEG)
        assert spec.weight == 1
        assert spec.duration_s == 1.6

    def test_bad_duration(self):
        with pytest.raises(ValueError):
            static_scene_spec(0.0, duration_s=0.0)

    def test_track_azimuth_out_of_range(self):
        with pytest.raises(ValueError):
            SceneSpec(
                label="x", duration_s=1.0, sample_rate_hz=SAMPLE_RATE,
                talker_track=((0.0, 2.0),), speech_intervals=(),
            )

    def test_interval_outside_scene(self):
        with pytest.raises(ValueError):
            SceneSpec(
                label="x", duration_s=1.0, sample_rate_hz=SAMPLE_RATE,
                talker_track=((0.0, 0.0),), speech_intervals=((0.5, 1.5),),
            )

    def test_reversed_interval(self):
        with pytest.raises(ValueError):
            SceneSpec(
                label="x", duration_s=1.0, sample_rate_hz=SAMPLE_RATE,
                talker_track=((0.0, 0.0),), speech_intervals=((0.8, 0.2),),
            )

    def test_echo_gain_must_be_below_one(self):
        with pytest.raises(ValueError):
            static_scene_spec(0.0, echoes=((0.005, 1.0, 0.0),))

    def test_negative_echo_delay_rejected(self):
        with pytest.raises(ValueError):
            static_scene_spec(0.0, echoes=((-0.001, 0.5, 0.0),))

    def test_unknown_distractor_kind(self):
        with pytest.raises(ValueError):
            static_scene_spec(0.0, distractors=((0.5, "horn", 0.5),))

    def test_distractor_time_outside_scene(self):
        with pytest.raises(ValueError):
            static_scene_spec(0.0, distractors=((9.0, "click", 0.5),))

    def test_zero_weight_rejected(self):
        with pytest.raises(ValueError):
            static_scene_spec(0.0, weight=0)

    def test_dict_round_trip(self):
        spec = static_scene_spec(
            -40.0 * DEG,
            echoes=((0.004, 0.5, 0.3),),
            distractors=((0.5, "burst", 0.6),),
            robot_noise=True,
            weight=3,
        )
        assert SceneSpec.from_dict(spec.to_dict()) == spec


class TestSuiteStructure:
    def test_counts_and_weights(self):
        suite = default_suite(0)
        assert len(suite.train) == 8
        assert len(suite.test) == 3
        assert tuple(s.weight for s in suite.train) == TRAIN_WEIGHTS
        assert TRAIN_WEIGHTS == (1, 1, 2, 2, 3, 2, 1, 3)

    def test_first_row_is_clean_static(self):
        row1 = default_suite(0).train[0]
        assert len(row1.talker_track) == 1
        assert row1.distractors == ()
        assert row1.robot_noise is False

    def test_fifth_row_has_robot_and_speech(self):
        row5 = default_suite(0).train[4]
        assert row5.robot_noise is True
        assert len(row5.speech_intervals) >= 1

    def test_mobile_rows_sweep_sixty_degrees(self):
        suite = default_suite(0)
        mobile = [s for s in suite.train if len(s.talker_track) > 1]
        assert len(mobile) == 3
        for s in mobile:
            angles = {round(a / DEG) for _, a in s.talker_track}
            assert angles == {-60, 60}

    def test_scenario_mix_covers_robot_rows(self):
        suite = default_suite(0)
        assert sum(s.robot_noise for s in suite.train) == 1
        assert sum(s.robot_noise for s in suite.test) == 2

    def test_wrong_train_count_rejected(self):
        suite = default_suite(0)
        with pytest.raises(ValueError):
            SceneSuite(train=suite.train[:7], test=suite.test)

    def test_wrong_weights_rejected(self):
        suite = default_suite(0)
        patched = tuple(
            SceneSpec.from_dict({**s.to_dict(), "weight": 9}) for s in suite.train
        )
        with pytest.raises(ValueError):
            SceneSuite(train=patched, test=suite.test)

    def test_seed_changes_scene_seeds(self):
        a = default_suite(0)
        b = default_suite(1)
        assert all(x.seed != y.seed for x, y in zip(a.train, b.train))

    def test_suite_dict_round_trip(self):
        suite = default_suite(2)
        assert suite_from_dict(suite_to_dict(suite)) == suite


class TestSynthSpeech:
    def test_unit_rms(self):
        s = synth_speech_like(2.0, seed=5)
        assert np.sqrt(np.mean(s.samples**2)) == pytest.approx(1.0, rel=1e-9)

    def test_deterministic(self):
        a = synth_speech_like(1.0, seed=4)
        b = synth_speech_like(1.0, seed=4)
        assert np.array_equal(a.samples, b.samples)

    def test_seed_matters(self):
        a = synth_speech_like(1.0, seed=4)
        b = synth_speech_like(1.0, seed=5)
        assert not np.array_equal(a.samples, b.samples)

    def test_band_limited(self):
        s = synth_speech_like(2.0, seed=5)
        mag = np.abs(np.fft.rfft(s.samples))
        freqs = np.fft.rfftfreq(len(s.samples), d=1 / SAMPLE_RATE)
        out_band = mag[(freqs < 280) | (freqs > 3450)].max()
        assert out_band < 0.01 * mag.max()

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            synth_speech_like(0.4)

    def test_bad_depth_rejected(self):
        with pytest.raises(ValueError):
            synth_speech_like(1.0, modulation_depth=1.5)


class TestBinauralize:
    def test_positive_azimuth_left_leads(self):
        src = synth_speech_like(1.0, seed=3)
        st = binauralize(src, ((0.0, 30.0 * DEG),))
        _, res = gcc(st.left, st.right, kind=WeightingKind.PLAIN_CC)
        expected = itd_woodworth(30.0 * DEG, HeadModel()) * SAMPLE_RATE
        assert res.lag_samples == round(expected)

    def test_zero_azimuth_identical_channels(self):
        src = synth_speech_like(1.0, seed=3)
        st = binauralize(src, ((0.0, 0.0),))
        assert np.array_equal(st.left.samples, st.right.samples)

    def test_length_preserved(self):
        src = synth_speech_like(1.0, seed=3)
        st = binauralize(src, ((0.0, -45.0 * DEG),))
        assert len(st) == len(src)


class TestRender:
    def test_deterministic(self):
        spec = static_scene_spec(30.0 * DEG)
        a = render(spec)
        b = render(spec)
        assert np.array_equal(a.audio.left.samples, b.audio.left.samples)
        assert np.array_equal(a.audio.right.samples, b.audio.right.samples)

    def test_annotation_carried_through(self):
        spec = static_scene_spec(-20.0 * DEG, weight=3, label="carry")
        rec = render(spec)
        assert rec.label == "carry"
        assert rec.weight == 3
        assert rec.speech_intervals == spec.speech_intervals
        assert rec.angle_track == spec.talker_track
        assert len(rec.audio) == int(round(spec.duration_s * SAMPLE_RATE))

    def test_static_scene_angle_recovered(self):
        rec = render(default_suite(0).train[0])
        framing = FramingParams(0.4, 1.0)
        lm, times = frame_matrix(rec.audio.left, framing)
        rm, _ = frame_matrix(rec.audio.right, framing)
        powers = (lm**2).mean(axis=1)
        inside = np.array(
            [
                any(a <= t and t + 0.4 <= b for a, b in rec.speech_intervals)
                for t in times
            ]
        )
        idx = int(np.argmax(np.where(inside, powers, -1.0)))
        fs = rec.audio.sample_rate
        _, res = gcc(MonoSignal(lm[idx], fs), MonoSignal(rm[idx], fs), kind=WeightingKind.PHAT)
        angle, clipped = angle_from_itd(res.lag_seconds, HeadModel())
        assert not clipped
        assert abs(angle - 30.0 * DEG) < 2.0 * DEG

    def test_speech_intervals_dominate_energy(self, train_recordings):
        fs = SAMPLE_RATE
        for rec in train_recordings:
            t = np.arange(len(rec.audio)) / fs
            mask = np.zeros(len(rec.audio), dtype=bool)
            for a, b in rec.speech_intervals:
                mask |= (t >= a) & (t < b)
            mono = rec.audio.mono_mix().samples
            rms_in = np.sqrt(np.mean(mono[mask] ** 2))
            rms_out = np.sqrt(np.mean(mono[~mask] ** 2))
            assert rms_in > rms_out, rec.label

    def test_no_intervals_means_no_speech_truth(self):
        spec = SceneSpec(
            label="quiet", duration_s=1.0, sample_rate_hz=SAMPLE_RATE,
            talker_track=((0.0, 0.0),), speech_intervals=(), noise_rms=0.01,
        )
        rec = render(spec)
        assert all(
            not ground_truth_label(t, 0.2, rec) for t in np.arange(0.0, 0.8, 0.2)
        )

    def test_echo_changes_audio(self):
        base = static_scene_spec(10.0 * DEG)
        echoed = static_scene_spec(10.0 * DEG, echoes=((0.005, 0.7, -0.5),))
        assert not np.array_equal(
            render(base).audio.left.samples, render(echoed).audio.left.samples
        )

    def test_distractors_change_audio(self):
        base = static_scene_spec(10.0 * DEG)
        with_clicks = static_scene_spec(10.0 * DEG, distractors=((0.8, "click", 0.6),))
        assert not np.array_equal(
            render(base).audio.left.samples, render(with_clicks).audio.left.samples
        )

    def test_robot_noise_changes_audio(self):
        base = static_scene_spec(10.0 * DEG)
        robo = static_scene_spec(10.0 * DEG, robot_noise=True)
        assert not np.array_equal(
            render(base).audio.left.samples, render(robo).audio.left.samples
        )

    def test_robot_noise_is_diotic(self):
        # hum/whine/chirps arrive with zero delay on both channels
        quiet = SceneSpec(
            label="robo-only", duration_s=1.0, sample_rate_hz=SAMPLE_RATE,
            talker_track=((0.0, 0.0),), speech_intervals=(), robot_noise=True,
        )
        rec = render(quiet)
        assert np.array_equal(rec.audio.left.samples, rec.audio.right.samples)


class TestWriteSuite:
    def test_disk_layout_and_manifest(self, tmp_path):
        suite = default_suite(0, duration_s=3.0)
        manifest = write_suite(suite, tmp_path)
        assert manifest == tmp_path / "manifest.json"
        wavs = sorted(p.name for p in tmp_path.glob("*.wav"))
        anns = sorted(p.name for p in tmp_path.glob("*.json") if p.name != "manifest.json")
        assert len(wavs) == 11
        assert len(anns) == 11
        doc = json.loads(manifest.read_text())
        assert sum(1 for e in doc["recordings"] if e["dataset"] == "train") == 8
        assert sum(1 for e in doc["recordings"] if e["dataset"] == "test") == 3

    def test_manifest_round_trip(self, tmp_path):
        suite = default_suite(0, duration_s=3.0)
        manifest = write_suite(suite, tmp_path)
        train, test = load_manifest(manifest)
        assert [r.label for r in train] == [s.label for s in suite.train]
        assert [r.label for r in test] == [s.label for s in suite.test]
        assert [r.weight for r in train] == list(TRAIN_WEIGHTS)
        rendered = render(suite.train[0])
        np.testing.assert_allclose(
            train[0].audio.left.samples, rendered.audio.left.samples, atol=1e-7
        )

    def test_load_recording_matches_annotation(self, tmp_path):
        suite = default_suite(0, duration_s=3.0)
        write_suite(suite, tmp_path)
        label = suite.train[2].label
        rec = load_recording(tmp_path / f"{label}.wav", tmp_path / f"{label}.json")
        assert rec.label == label
        assert rec.weight == suite.train[2].weight
        np.testing.assert_allclose(rec.speech_intervals, suite.train[2].speech_intervals)

    def test_suite_json_round_trip(self, tmp_path):
        suite = default_suite(3, duration_s=3.0)
        path = tmp_path / "suite.json"
        path.write_text(json.dumps(suite_to_dict(suite)))
        assert load_suite_json(path) == suite
