"""Binaural direction-of-arrival estimation lab.

Core layout:

- signals: mono/stereo containers, framing, transforms, WAV I/O
- timing: generalized cross-correlation delay estimation (CC/PHAT/SCOT)
- geometry: spherical-head delay-to-angle mapping and calibration
- classify: speech-frame detection (power-onset ratio, modulation ratio)
- pipeline: frame classification + delay + angle per frame, metrics, latency
- scenes: synthetic binaural scene generation and the default dataset
- optimize: weighted objectives, grid search, TPE, random baseline, exports
- service/cli: HTTP front end and its thin command-line client
"""

__version__ = "0.1.0"

from .classify import ClassifierKind, Thresholds
from .errors import SilentFrameError, UnidentifiableError
from .geometry import HeadModel, angle_from_itd, calibrate_distance, itd_woodworth
from .pipeline import (
    BEST_OVERALL_PARAMS,
    AnnotatedRecording,
    DoaEstimate,
    GroundTruth,
    Metrics,
    PipelineParams,
    evaluate,
    latency_experiment,
    run_pipeline,
)
from .signals import FramingParams, MonoSignal, StereoSignal, read_wav, write_wav
from .timing import WeightingKind, gcc
from .scenes import SceneSpec, SceneSuite, default_suite, render, write_suite
from .optimize import (
    ObjectiveKind,
    ParamSpace,
    TpeConfig,
    aggregate,
    grid_search,
    random_search,
    tpe_optimize,
)

__all__ = [
    "__version__",
    "AnnotatedRecording",
    "BEST_OVERALL_PARAMS",
    "ClassifierKind",
    "DoaEstimate",
    "FramingParams",
    "GroundTruth",
    "HeadModel",
    "Metrics",
    "MonoSignal",
    "ObjectiveKind",
    "ParamSpace",
    "PipelineParams",
    "SceneSpec",
    "SceneSuite",
    "SilentFrameError",
    "StereoSignal",
    "Thresholds",
    "TpeConfig",
    "UnidentifiableError",
    "WeightingKind",
    "aggregate",
    "angle_from_itd",
    "calibrate_distance",
    "default_suite",
    "evaluate",
    "gcc",
    "grid_search",
    "itd_woodworth",
    "latency_experiment",
    "random_search",
    "read_wav",
    "render",
    "run_pipeline",
    "tpe_optimize",
    "write_suite",
    "write_wav",
]
