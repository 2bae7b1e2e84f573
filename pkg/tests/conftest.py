"""Shared fixtures: small rendered scenes and parameter shorthands.

Scene rendering dominates test runtime, so the fixtures that render are
session-scoped and the scenes kept short; tests never mutate them
(signals are read-only by construction).
"""

import numpy as np
import pytest

from doa_lab.classify import ClassifierKind, Thresholds
from doa_lab.geometry import HeadModel
from doa_lab.pipeline import PipelineParams
from doa_lab.scenes import SceneSpec, render
from doa_lab.signals import FramingParams, MonoSignal, StereoSignal
from doa_lab.timing import WeightingKind

SAMPLE_RATE = 16000.0


def make_mono(samples, rate=SAMPLE_RATE) -> MonoSignal:
    return MonoSignal(np.asarray(samples, dtype=np.float64), rate)


def make_stereo(left, right, rate=SAMPLE_RATE) -> StereoSignal:
    return StereoSignal(make_mono(left, rate), make_mono(right, rate))


def noise_mono(n, seed=0, rate=SAMPLE_RATE) -> MonoSignal:
    rng = np.random.default_rng(seed)
    return make_mono(rng.standard_normal(n), rate)


def static_scene_spec(
    azimuth_rad: float,
    duration_s: float = 1.6,
    seed: int = 0,
    noise_rms: float = 0.01,
    label: str = "unit-static",
    **kwargs,
) -> SceneSpec:
    """A short static-talker scene with two speech intervals."""
    return SceneSpec(
        label=label,
        duration_s=duration_s,
        sample_rate_hz=SAMPLE_RATE,
        talker_track=((0.0, azimuth_rad), (duration_s, azimuth_rad)),
        speech_intervals=(
            (0.10 * duration_s, 0.45 * duration_s),
            (0.55 * duration_s, 0.90 * duration_s),
        ),
        noise_rms=noise_rms,
        seed=seed,
        **kwargs,
    )


def quick_params(
    classifier=ClassifierKind.SRMR,
    timing=WeightingKind.PHAT,
    frame_size_s=0.34,
    step_fraction=0.9,
    delta_low=1.5,
    delta_high=7.0,
) -> PipelineParams:
    return PipelineParams(
        classifier=classifier,
        timing=timing,
        framing=FramingParams(frame_size_s=frame_size_s, step_fraction=step_fraction),
        thresholds=Thresholds(delta_low=delta_low, delta_high=delta_high),
    )


@pytest.fixture(scope="session")
def head() -> HeadModel:
    return HeadModel()


@pytest.fixture(scope="session")
def static_recording():
    """One 1.6 s static scene at 30 degrees, rendered once per session."""
    return render(static_scene_spec(np.deg2rad(30.0)))


@pytest.fixture(scope="session")
def swapped_recording(static_recording):
    from doa_lab.pipeline import AnnotatedRecording

    rec = static_recording
    return AnnotatedRecording(
        audio=rec.audio.swapped(),
        speech_intervals=rec.speech_intervals,
        angle_track=tuple((t, -a) for t, a in rec.angle_track),
        weight=rec.weight,
        label=rec.label + "-swapped",
    )


@pytest.fixture(scope="session")
def train_recordings():
    """The default training suite rendered once per session (seed 0)."""
    from doa_lab.scenes import default_suite

    return [render(spec) for spec in default_suite(0).train]
