"""Request/response models for the HTTP service.

Payloads reference files by path: the service and its clients share a
filesystem, so audio and trial dumps stay on disk and responses carry
paths plus summary numbers.  All angles are radians and all times are
seconds; converting to degrees is a display concern.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..geometry import HeadModel
from ..optimize import params_from_dict, params_to_dict
from ..pipeline import Metrics, PipelineParams


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HealthResponse(StrictModel):
    status: str
    version: str


class HeadModelIn(StrictModel):
    ear_distance_m: float = 0.255
    speed_of_sound_mps: float = 343.0

    def to_model(self) -> HeadModel:
        return HeadModel(
            ear_distance_m=self.ear_distance_m,
            speed_of_sound_mps=self.speed_of_sound_mps,
        )


class ParamsModel(StrictModel):
    """The six-dimensional pipeline decision vector."""

    classifier: Literal["po", "srmr"]
    timing: Literal["cc", "phat", "scot"]
    frame_size_s: float = Field(gt=0)
    step_fraction: float = Field(gt=0, le=1)
    delta_low: float = Field(gt=0)
    delta_high: float = Field(gt=0)

    def to_params(self) -> PipelineParams:
        return params_from_dict(self.model_dump())

    @classmethod
    def from_params(cls, params: PipelineParams) -> "ParamsModel":
        return cls(**params_to_dict(params))


class MetricsModel(StrictModel):
    f1: float
    mse: float | None
    n_accepted: int
    n_frames: int
    no_speech: bool

    @classmethod
    def from_metrics(cls, m: Metrics) -> "MetricsModel":
        return cls(
            f1=m.f1,
            mse=None if math.isnan(m.mse) else m.mse,
            n_accepted=m.n_accepted,
            n_frames=m.n_frames,
            no_speech=m.no_speech,
        )


# ---------------------------------------------------------------------------
# /simulate


class SimulateRequest(StrictModel):
    out_dir: str
    suite: str | None = None
    seed: int = 0
    duration_s: float = Field(default=8.0, gt=0)
    head: HeadModelIn = HeadModelIn()


class SimulateResponse(StrictModel):
    manifest: str
    n_train: int
    n_test: int
    wav_files: list[str]


# ---------------------------------------------------------------------------
# /estimate


class EstimateRequest(StrictModel):
    wav: str
    out_csv: str
    params: ParamsModel | None = None
    head: HeadModelIn = HeadModelIn()


class EstimateResponse(StrictModel):
    csv: str
    n_frames: int
    n_accepted: int


# ---------------------------------------------------------------------------
# /evaluate


class EvaluateRequest(StrictModel):
    estimates: str
    annotation: str


class EvaluateResponse(StrictModel):
    metrics: MetricsModel


# ---------------------------------------------------------------------------
# /optimize


class OptimizeRequest(StrictModel):
    manifest: str
    out_dir: str
    method: Literal["grid", "tpe", "random"]
    objective: Literal["classification", "doa", "joint", "jointreg"]
    trials: int = Field(default=100, ge=0)
    seed: int = 0
    space: str | None = None
    dataset: Literal["train", "test", "all"] = "train"
    lam: float = 0.5
    head: HeadModelIn = HeadModelIn()


class OptimizeResponse(StrictModel):
    best: ParamsModel | None
    best_rounded: ParamsModel | None
    best_objective: float | None
    n_trials: int
    trials_jsonl: str
    best_json: str
    no_trials: bool = False


# ---------------------------------------------------------------------------
# /latency


class LatencyRequest(StrictModel):
    manifest: str
    frame_sizes_s: list[float] = Field(min_length=1)
    repeats: int = Field(default=1, ge=1)
    params: ParamsModel | None = None
    head: HeadModelIn = HeadModelIn()


class LatencyGroupModel(StrictModel):
    frame_size_s: float
    n_events: int
    n_dropped: int
    mean_s: float | None
    std_s: float | None
    latencies_s: list[float]


class TTestModel(StrictModel):
    frame_a_s: float
    frame_b_s: float
    statistic: float
    p_value: float


class LatencyResponse(StrictModel):
    groups: list[LatencyGroupModel]
    t_test: TTestModel | None


# ---------------------------------------------------------------------------
# /calibrate


class CalibrateRequest(StrictModel):
    observations: str
    speed_of_sound_mps: float = Field(default=343.0, gt=0)
    out: str | None = None


class CalibrateResponse(StrictModel):
    ear_distance_m: float
    n_observations: int


# ---------------------------------------------------------------------------
# /contour


class ContourRequest(StrictModel):
    trials: str
    out: str
    x: str
    y: str
    stat: Literal["min", "mean"] = "min"
    bins: int = Field(default=20, ge=1)


class ContourResponse(StrictModel):
    csv: str
    x_param: str
    y_param: str
    bins_x: int
    bins_y: int
    n_filled: int
