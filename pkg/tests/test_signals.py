"""Signal container, framing, transform, envelope and WAV I/O tests."""

import numpy as np
import pytest
from scipy.io import wavfile

from doa_lab.signals import (
    FramingParams,
    MonoSignal,
    Spectrum,
    StereoSignal,
    analytic_envelope,
    envelope_matrix,
    forward_transform,
    frame_matrix,
    frame_positions,
    frame_power,
    frame_stream,
    inverse_transform,
    read_wav,
    write_wav,
)

from conftest import SAMPLE_RATE, make_mono, make_stereo, noise_mono


class TestMonoSignal:
    def test_basic_fields(self):
        sig = make_mono([0.0, 0.5, -0.5, 0.25])
        assert len(sig) == 4
        assert sig.duration_s == pytest.approx(4 / SAMPLE_RATE)

    def test_samples_read_only(self):
        sig = make_mono([1.0, 2.0])
        with pytest.raises(ValueError):
            sig.samples[0] = 0.0

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            make_mono([0.0, np.nan])

    def test_inf_rejected(self):
        with pytest.raises(ValueError):
            make_mono([np.inf, 0.0])

    def test_bad_rate_rejected(self):
        with pytest.raises(ValueError):
            MonoSignal(np.zeros(4), 0.0)

    def test_two_dimensional_rejected(self):
        with pytest.raises(ValueError):
            MonoSignal(np.zeros((2, 2)), SAMPLE_RATE)


class TestStereoSignal:
    def test_mono_mix_is_channel_mean(self):
        st = make_stereo([1.0, 0.0], [0.0, 1.0])
        assert np.array_equal(st.mono_mix().samples, [0.5, 0.5])

    def test_swapped_exchanges_channels(self):
        st = make_stereo([1.0, 2.0], [3.0, 4.0])
        sw = st.swapped()
        assert np.array_equal(sw.left.samples, st.right.samples)
        assert np.array_equal(sw.right.samples, st.left.samples)

    def test_rate_mismatch_rejected(self):
        with pytest.raises(ValueError):
            StereoSignal(MonoSignal(np.zeros(4), 16000.0), MonoSignal(np.zeros(4), 8000.0))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            make_stereo([0.0, 0.0], [0.0, 0.0, 0.0])


class TestFramingParams:
    def test_hop_is_fraction_of_frame(self):
        p = FramingParams(frame_size_s=0.5, step_fraction=0.5)
        assert p.hop_s == 0.25
        assert p.frame_samples(16000.0) == 8000
        assert p.hop_samples(16000.0) == 4000

    @pytest.mark.parametrize("frame,step", [(0.0, 0.5), (-1.0, 0.5), (0.5, 0.0), (0.5, 1.5)])
    def test_invalid_rejected(self, frame, step):
        with pytest.raises(ValueError):
            FramingParams(frame_size_s=frame, step_fraction=step)


class TestFraming:
    def test_non_overlapping_tiling(self):
        sig = noise_mono(int(2.0 * SAMPLE_RATE))
        frames = list(frame_stream(sig, FramingParams(0.5, 1.0)))
        assert [t for t, _ in frames] == [0.0, 0.5, 1.0, 1.5]
        assert all(len(f) == 8000 for _, f in frames)

    def test_half_overlap_count(self):
        # floor((2.0 - 0.5) / 0.25) + 1
        sig = noise_mono(int(2.0 * SAMPLE_RATE))
        frames = list(frame_stream(sig, FramingParams(0.5, 0.5)))
        assert len(frames) == 7
        assert frames[1][0] == pytest.approx(0.25)

    def test_too_short_yields_nothing(self):
        sig = noise_mono(int(0.3 * SAMPLE_RATE))
        assert list(frame_stream(sig, FramingParams(0.5, 1.0))) == []

    def test_trailing_partial_dropped(self):
        sig = noise_mono(8010)
        frames = list(frame_stream(sig, FramingParams(0.5, 1.0)))
        assert len(frames) == 1

    def test_tiny_frame_rejected(self):
        sig = noise_mono(100)
        with pytest.raises(ValueError):
            list(frame_stream(sig, FramingParams(1e-5, 1.0)))

    def test_frame_content_matches_slices(self):
        sig = noise_mono(1000)
        params = FramingParams(frame_size_s=256 / SAMPLE_RATE, step_fraction=0.5)
        for t, frame in frame_stream(sig, params):
            start = int(round(t * SAMPLE_RATE))
            assert np.array_equal(frame.samples, sig.samples[start:start + 256])

    def test_positions_empty_for_short_signal(self):
        assert frame_positions(10, FramingParams(0.5, 1.0), SAMPLE_RATE).size == 0

    def test_matrix_matches_stream(self):
        sig = noise_mono(5000)
        params = FramingParams(frame_size_s=0.05, step_fraction=0.4)
        mat, times = frame_matrix(sig, params)
        streamed = list(frame_stream(sig, params))
        assert mat.shape[0] == len(streamed)
        for row, t_row, (t, frame) in zip(mat, times, streamed):
            assert t_row == pytest.approx(t)
            assert np.array_equal(row, frame.samples)

    def test_matrix_empty_signal(self):
        mat, times = frame_matrix(noise_mono(10), FramingParams(0.5, 1.0))
        assert mat.shape[0] == 0
        assert times.size == 0


class TestTransforms:
    def test_constant_frame_is_dc_only(self):
        spec = forward_transform(make_mono([1.0, 1.0, 1.0, 1.0]))
        assert spec.bins[0] == pytest.approx(4.0)
        np.testing.assert_allclose(np.abs(spec.bins[1:]), 0.0, atol=1e-12)

    def test_impulse_has_flat_spectrum(self):
        spec = forward_transform(make_mono([1.0, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(spec.bins, np.ones(4), atol=1e-12)

    def test_round_trip(self):
        sig = noise_mono(512)
        back = inverse_transform(forward_transform(sig))
        np.testing.assert_allclose(back.samples, sig.samples, atol=1e-9)

    def test_empty_frame_rejected(self):
        with pytest.raises(ValueError):
            forward_transform(make_mono([]))

    def test_empty_spectrum_rejected(self):
        with pytest.raises(ValueError):
            inverse_transform(Spectrum(np.empty(0, dtype=complex), SAMPLE_RATE, 0))

    def test_spectrum_bin_count_enforced(self):
        with pytest.raises(ValueError):
            Spectrum(np.ones(3, dtype=complex), SAMPLE_RATE, 4)


class TestEnvelope:
    def test_tone_envelope_equals_amplitude(self):
        n = int(0.5 * SAMPLE_RATE)
        t = np.arange(n) / SAMPLE_RATE
        env = analytic_envelope(make_mono(2.0 * np.sin(2 * np.pi * 1000.0 * t)))
        core = env.samples[n // 10 : -n // 10]
        assert np.all(np.abs(core - 2.0) < 0.04)

    def test_envelope_tracks_modulator(self):
        n = int(0.5 * SAMPLE_RATE)
        t = np.arange(n) / SAMPLE_RATE
        modulator = 1.0 + 0.8 * np.sin(2 * np.pi * 8.0 * t)
        carrier = np.sin(2 * np.pi * 1000.0 * t)
        env = analytic_envelope(make_mono(modulator * carrier))
        core = slice(n // 10, -n // 10)
        corr = np.corrcoef(env.samples[core], modulator[core])[0, 1]
        assert corr > 0.95

    def test_zero_frame_zero_envelope(self):
        env = analytic_envelope(make_mono(np.zeros(64)))
        assert np.array_equal(env.samples, np.zeros(64))

    def test_non_negative(self):
        env = analytic_envelope(noise_mono(256))
        assert np.all(env.samples >= 0.0)

    def test_sign_flip_invariant(self):
        sig = noise_mono(256)
        flipped = make_mono(-sig.samples)
        assert np.array_equal(
            analytic_envelope(sig).samples, analytic_envelope(flipped).samples
        )

    def test_short_frame_rejected(self):
        with pytest.raises(ValueError):
            analytic_envelope(make_mono(np.ones(7)))

    def test_matrix_matches_scalar(self):
        frames = np.random.default_rng(0).standard_normal((4, 128))
        batch = envelope_matrix(frames)
        for row, frame in zip(batch, frames):
            np.testing.assert_allclose(
                row, analytic_envelope(make_mono(frame)).samples, rtol=1e-9, atol=1e-12
            )


class TestFramePower:
    def test_alternating_unit(self):
        assert frame_power(make_mono([1.0, -1.0, 1.0, -1.0])) == 1.0

    def test_zeros(self):
        assert frame_power(make_mono([0.0, 0.0, 0.0])) == 0.0

    def test_single_spike(self):
        assert frame_power(make_mono([3.0, 0.0, 0.0, 0.0])) == 2.25

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            frame_power(make_mono([]))


class TestWavIO:
    def test_float32_mono_round_trip(self, tmp_path):
        sig = noise_mono(1000)
        path = tmp_path / "mono.wav"
        write_wav(path, sig)
        back = read_wav(path)
        assert isinstance(back, MonoSignal)
        assert back.sample_rate == SAMPLE_RATE
        np.testing.assert_allclose(back.samples, sig.samples, atol=1e-7)

    def test_float32_stereo_round_trip(self, tmp_path):
        st = make_stereo(noise_mono(500).samples, noise_mono(500, seed=1).samples)
        path = tmp_path / "stereo.wav"
        write_wav(path, st)
        back = read_wav(path)
        assert isinstance(back, StereoSignal)
        np.testing.assert_allclose(back.left.samples, st.left.samples, atol=1e-7)
        np.testing.assert_allclose(back.right.samples, st.right.samples, atol=1e-7)

    def test_pcm16_round_trip_quantized(self, tmp_path):
        sig = make_mono(np.linspace(-0.9, 0.9, 1000))
        path = tmp_path / "pcm.wav"
        write_wav(path, sig, encoding="pcm16")
        back = read_wav(path)
        assert np.max(np.abs(back.samples - sig.samples)) <= 0.5 / 32768.0 + 1e-12

    def test_pcm16_clips_overrange(self, tmp_path):
        sig = make_mono([2.0, -2.0, 0.0])
        path = tmp_path / "clip.wav"
        write_wav(path, sig, encoding="pcm16")
        back = read_wav(path)
        assert back.samples[0] == pytest.approx(32767 / 32768.0)
        assert back.samples[1] == pytest.approx(-1.0)

    def test_unknown_encoding_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_wav(tmp_path / "x.wav", noise_mono(10), encoding="mp3")

    def test_three_channel_rejected(self, tmp_path):
        path = tmp_path / "three.wav"
        wavfile.write(str(path), 16000, np.zeros((100, 3), dtype=np.float32))
        with pytest.raises(ValueError):
            read_wav(path)
