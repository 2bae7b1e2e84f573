"""Parameter search over the pipeline's six-dimensional decision vector.

Provides the weighted objective functions, an exhaustive grid search, a
Tree-structured Parzen Estimator (TPE) written from scratch, a random-search
baseline sharing the TPE prior, and contour/trace exports.  All searches
minimize; trials that find no speech anywhere are penalized rather than
discarded so optimizers can still rank them.
"""

from __future__ import annotations

import enum
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .classify import ClassifierKind, Thresholds
from .geometry import HeadModel
from .pipeline import (
    DEFAULT_OPTIONS,
    AnnotatedRecording,
    Metrics,
    PipelineOptions,
    PipelineParams,
    evaluate,
    run_pipeline,
)
from .signals import FramingParams
from .timing import WeightingKind

__all__ = [
    "PENALTY",
    "DEFAULT_LAMBDA",
    "ObjectiveKind",
    "GridRange",
    "UniformRange",
    "NormalPrior",
    "ParamSpace",
    "Trial",
    "TpeConfig",
    "aggregate",
    "sample_prior",
    "grid_search",
    "tpe_suggest",
    "tpe_optimize",
    "random_search",
    "tpe_minimize",
    "random_minimize",
    "contour_export",
    "ContourGrid",
    "write_contour_csv",
    "default_grid_space",
    "default_tpe_space",
    "params_to_dict",
    "params_from_dict",
    "space_to_dict",
    "space_from_dict",
    "load_space_json",
    "write_trials_jsonl",
    "read_trials_jsonl",
    "presentation_rounding",
]

PENALTY = 1e6
DEFAULT_LAMBDA = 0.5

NUMERIC_PARAM_NAMES = ("frame_size_s", "step_fraction", "delta_low", "delta_high")


class ObjectiveKind(enum.Enum):
    CLASSIFICATION = "classification"
    DOA = "doa"
    JOINT = "joint"
    JOINT_REG = "jointreg"


# ---------------------------------------------------------------------------
# Search space


@dataclass(frozen=True)
class GridRange:
    """Inclusive discrete grid min..max in fixed steps."""

    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and math.isfinite(self.step)):
            raise ValueError("grid bounds must be finite")
        if not self.step > 0 or self.hi < self.lo:
            raise ValueError(f"bad grid range ({self.lo}, {self.hi}, {self.step})")

    def points(self) -> np.ndarray:
        count = int(round((self.hi - self.lo) / self.step)) + 1
        pts = np.round(self.lo + self.step * np.arange(count), 10)
        return pts[pts <= self.hi + 1e-9]


@dataclass(frozen=True)
class UniformRange:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi <= self.lo:
            raise ValueError(f"bad uniform range ({self.lo}, {self.hi})")


@dataclass(frozen=True)
class NormalPrior:
    """Gaussian prior truncated at 0 when sampled (thresholds must be > 0)."""

    mean: float
    std: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.std)) or self.std <= 0:
            raise ValueError(f"bad normal prior ({self.mean}, {self.std})")


NumericDist = GridRange | UniformRange | NormalPrior


@dataclass(frozen=True)
class ParamSpace:
    """Dual-form space: every numeric dimension is a grid or a distribution."""

    classifier_choices: tuple[ClassifierKind, ...]
    timing_choices: tuple[WeightingKind, ...]
    frame_size: NumericDist
    step_fraction: NumericDist
    delta_low: NumericDist
    delta_high: NumericDist

    def __post_init__(self):
        object.__setattr__(self, "classifier_choices", tuple(self.classifier_choices))
        object.__setattr__(self, "timing_choices", tuple(self.timing_choices))
        if not self.classifier_choices or not self.timing_choices:
            raise ValueError("choice sets must be non-empty")

    def numeric(self, name: str) -> NumericDist:
        mapping = {
            "frame_size_s": self.frame_size,
            "step_fraction": self.step_fraction,
            "delta_low": self.delta_low,
            "delta_high": self.delta_high,
        }
        if name not in mapping:
            raise ValueError(f"unknown numeric parameter {name!r}")
        return mapping[name]


def default_grid_space() -> ParamSpace:
    """The full discrete search grid (large: intended for coarse subsets)."""
    return ParamSpace(
        classifier_choices=(ClassifierKind.POWER_ONSET, ClassifierKind.SRMR),
        timing_choices=(WeightingKind.PLAIN_CC, WeightingKind.SCOT, WeightingKind.PHAT),
        frame_size=GridRange(0.1, 1.0, 0.05),
        step_fraction=GridRange(0.1, 1.0, 0.05),
        delta_low=GridRange(1.0, 10.0, 0.1),
        delta_high=GridRange(3.0, 14.0, 0.1),
    )


def default_tpe_space() -> ParamSpace:
    """Distribution form of the same space, for TPE and random search."""
    return ParamSpace(
        classifier_choices=(ClassifierKind.POWER_ONSET, ClassifierKind.SRMR),
        timing_choices=(WeightingKind.PLAIN_CC, WeightingKind.SCOT, WeightingKind.PHAT),
        frame_size=UniformRange(0.1, 1.0),
        step_fraction=UniformRange(0.1, 1.0),
        delta_low=NormalPrior(3.0, 3.0),
        delta_high=NormalPrior(10.0, 3.0),
    )


# ---------------------------------------------------------------------------
# Trials and objectives


@dataclass(frozen=True)
class Trial:
    params: PipelineParams
    per_recording: tuple[Metrics, ...]
    objective: float
    valid: bool

    def __post_init__(self):
        if not math.isfinite(self.objective):
            raise ValueError("trial objective must be finite (penalize instead)")


@dataclass(frozen=True)
class TpeConfig:
    n_startup: int = 20
    gamma_quantile: float = 0.25
    n_candidates: int = 24
    seed: int = 0

    def __post_init__(self):
        if self.n_startup < 1 or self.n_candidates < 1:
            raise ValueError("n_startup and n_candidates must be >= 1")
        if not 0.0 < self.gamma_quantile < 1.0:
            raise ValueError("gamma_quantile must be in (0, 1)")


def aggregate(
    per_recording: Sequence[Metrics],
    weights: Sequence[float],
    kind: ObjectiveKind,
    frame_size_s: float,
    lam: float = DEFAULT_LAMBDA,
) -> float:
    """Weighted objective over the training recordings (lower is better).

    classification: -sum(w*f1)/sum(w); doa: sum(w*mse)/sum(w); joint:
    sum(w*(mse/f1))/sum(w); jointreg adds lam*|frame_size|.  A no-speech
    marker anywhere, an f1 of 0 under joint objectives, or an undefined mse
    where mse is needed, all return the flat penalty.
    """
    if len(per_recording) != len(weights):
        raise ValueError("per_recording and weights length mismatch")
    if not per_recording:
        raise ValueError("need at least one recording")
    if any(w <= 0 for w in weights):
        raise ValueError("weights must be positive")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if any(m.no_speech for m in per_recording):
        return PENALTY
    w = np.asarray(weights, dtype=np.float64)
    f1 = np.asarray([m.f1 for m in per_recording])
    mse = np.asarray([m.mse for m in per_recording])
    wsum = w.sum()
    if kind is ObjectiveKind.CLASSIFICATION:
        return float(-(w * f1).sum() / wsum)
    if not np.all(np.isfinite(mse)):
        return PENALTY
    if kind is ObjectiveKind.DOA:
        return float((w * mse).sum() / wsum)
    if np.any(f1 == 0.0):
        return PENALTY
    joint = float((w * (mse / f1)).sum() / wsum)
    if kind is ObjectiveKind.JOINT:
        return joint
    if kind is ObjectiveKind.JOINT_REG:
        return joint + lam * abs(frame_size_s)
    raise ValueError(f"unknown objective kind: {kind!r}")


# ---------------------------------------------------------------------------
# Sampling

_MAX_PAIR_ATTEMPTS = 100


def _sample_numeric(dist: NumericDist, rng: np.random.Generator) -> float:
    if isinstance(dist, GridRange):
        pts = dist.points()
        return float(pts[rng.integers(len(pts))])
    if isinstance(dist, UniformRange):
        return float(rng.uniform(dist.lo, dist.hi))
    while True:
        v = float(rng.normal(dist.mean, dist.std))
        if v > 0.0:
            return v


def _sample_threshold_pair(space: ParamSpace, rng: np.random.Generator) -> tuple[float, float]:
    """Draw (delta_low, delta_high) with low < high.

    Rejection-resample up to a fixed number of attempts, then swap the last
    pair; the pathological equal-pair case (possible only on grids) nudges
    the high value up by one grid step.
    """
    low = high = 0.0
    for _ in range(_MAX_PAIR_ATTEMPTS):
        low = _sample_numeric(space.delta_low, rng)
        high = _sample_numeric(space.delta_high, rng)
        if low < high:
            return low, high
    if low > high:
        low, high = high, low
    if low == high:
        bump = space.delta_high.step if isinstance(space.delta_high, GridRange) else 1e-6
        high = low + bump
    return low, high


def sample_prior(space: ParamSpace, rng: np.random.Generator) -> PipelineParams:
    """One draw from the declared prior; shared by random search and TPE startup."""
    classifier = space.classifier_choices[rng.integers(len(space.classifier_choices))]
    timing = space.timing_choices[rng.integers(len(space.timing_choices))]
    frame = _sample_numeric(space.frame_size, rng)
    step = _sample_numeric(space.step_fraction, rng)
    low, high = _sample_threshold_pair(space, rng)
    return PipelineParams(
        classifier=classifier,
        timing=timing,
        framing=FramingParams(frame_size_s=frame, step_fraction=step),
        thresholds=Thresholds(delta_low=low, delta_high=high),
    )


# ---------------------------------------------------------------------------
# Evaluation against a dataset


def _params_key(p: PipelineParams) -> tuple:
    return (
        p.classifier.value,
        p.timing.value,
        p.framing.frame_size_s,
        p.framing.step_fraction,
        p.thresholds.delta_low,
        p.thresholds.delta_high,
    )


class _DatasetEvaluator:
    """Evaluates a parameter vector over ordered recordings, with a cache.

    Walks recordings in manifest order and stops at the first no-speech
    marker (remaining recordings are skipped); such trials carry the
    penalty objective.  Results are cached by exact parameter values.
    """

    def __init__(
        self,
        dataset: Sequence[AnnotatedRecording],
        kind: ObjectiveKind,
        model: HeadModel | None,
        options: PipelineOptions,
        lam: float,
    ):
        if not dataset:
            raise ValueError("dataset must contain at least one recording")
        self.dataset = list(dataset)
        self.weights = [r.weight for r in self.dataset]
        self.kind = kind
        self.model = model or HeadModel()
        self.options = options
        self.lam = lam
        self.cache: dict[tuple, Trial] = {}

    def __call__(self, params: PipelineParams) -> Trial:
        key = _params_key(params)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        per: list[Metrics] = []
        terminated = False
        for rec in self.dataset:
            metrics = evaluate(run_pipeline(rec, params, self.model, self.options), rec)
            per.append(metrics)
            if metrics.no_speech:
                terminated = True
                break
        if terminated:
            trial = Trial(params, tuple(per), PENALTY, False)
        else:
            objective = aggregate(
                per, self.weights, self.kind, params.framing.frame_size_s, self.lam
            )
            trial = Trial(params, tuple(per), objective, objective < PENALTY)
        return self.cache.setdefault(key, trial)


def _best_key(t: Trial) -> tuple:
    p = t.params
    return (
        t.objective,
        p.framing.frame_size_s,
        p.classifier.value,
        p.timing.value,
        p.framing.step_fraction,
        p.thresholds.delta_low,
        p.thresholds.delta_high,
    )


def _pick_best(trials: Sequence[Trial]) -> Trial:
    # argmin objective; ties go to the smaller frame size, then the rest of
    # the vector in a fixed lexicographic order
    return min(trials, key=_best_key)


def _thread_count() -> int:
    raw = os.environ.get("DOA_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def grid_search(
    space: ParamSpace,
    kind: ObjectiveKind,
    dataset: Sequence[AnnotatedRecording],
    model: HeadModel | None = None,
    options: PipelineOptions = DEFAULT_OPTIONS,
    lam: float = DEFAULT_LAMBDA,
) -> tuple[Trial, list[Trial]]:
    """Exhaustively evaluate the Cartesian product of a fully discrete space.

    Threshold combinations violating low < high are not part of the
    feasible space and are skipped.  DOA_LAB_THREADS > 1 evaluates trials
    in a thread pool; trial order stays deterministic either way.
    """
    for name in NUMERIC_PARAM_NAMES:
        if not isinstance(space.numeric(name), GridRange):
            raise ValueError(f"grid search needs a discrete grid for {name}")
    combos: list[PipelineParams] = []
    for classifier in space.classifier_choices:
        for timing in space.timing_choices:
            for frame in space.frame_size.points():
                for step in space.step_fraction.points():
                    for low in space.delta_low.points():
                        for high in space.delta_high.points():
                            if 0.0 < low < high:
                                combos.append(
                                    PipelineParams(
                                        classifier=classifier,
                                        timing=timing,
                                        framing=FramingParams(float(frame), float(step)),
                                        thresholds=Thresholds(float(low), float(high)),
                                    )
                                )
    if not combos:
        raise ValueError("empty grid")
    evaluator = _DatasetEvaluator(dataset, kind, model, options, lam)
    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials = list(pool.map(evaluator, combos))
    else:
        trials = [evaluator(p) for p in combos]
    return _pick_best(trials), trials


# ---------------------------------------------------------------------------
# TPE


def _phi_cdf(x: float) -> float:
    if x == math.inf:
        return 1.0
    if x == -math.inf:
        return 0.0
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


class _ParzenNumeric:
    """Mixture of equally weighted truncated Gaussian kernels."""

    def __init__(self, values: Sequence[float], dist: NumericDist):
        if isinstance(dist, UniformRange):
            self.lo, self.hi = dist.lo, dist.hi
            span = dist.hi - dist.lo
        elif isinstance(dist, NormalPrior):
            self.lo, self.hi = 0.0, math.inf
            span = 4.0 * dist.std  # effective width of the prior
        else:
            raise ValueError("TPE needs distribution-form numeric dimensions")
        self.centers = np.asarray(values, dtype=np.float64)
        self.bandwidth = max(span / len(self.centers), 0.01 * span)
        # per-kernel truncation mass
        self._mass = np.array(
            [
                _phi_cdf((self.hi - c) / self.bandwidth) - _phi_cdf((self.lo - c) / self.bandwidth)
                for c in self.centers
            ]
        )
        self._mass = np.maximum(self._mass, 1e-300)

    def log_pdf(self, x: float) -> float:
        if x < self.lo or x > self.hi:
            return -math.inf
        z = (x - self.centers) / self.bandwidth
        kernel = np.exp(-0.5 * z * z) / (self.bandwidth * math.sqrt(2.0 * math.pi))
        return float(np.log(np.mean(kernel / self._mass) + 1e-300))

    def sample(self, rng: np.random.Generator) -> float:
        center = float(self.centers[rng.integers(len(self.centers))])
        value = center
        for _ in range(_MAX_PAIR_ATTEMPTS):
            value = float(rng.normal(center, self.bandwidth))
            if self.lo <= value <= self.hi:
                return value
        return min(max(value, self.lo + 1e-9), self.hi)


class _ParzenCategorical:
    """Additively smoothed category frequencies."""

    def __init__(self, observed: Sequence, choices: Sequence):
        self.choices = list(choices)
        counts = np.array([sum(1 for o in observed if o == c) for c in self.choices], dtype=float)
        self.probs = (counts + 1.0) / (counts.sum() + len(self.choices))

    def log_pdf(self, value) -> float:
        return float(np.log(self.probs[self.choices.index(value)]))

    def sample(self, rng: np.random.Generator):
        return self.choices[rng.choice(len(self.choices), p=self.probs)]


_NUMERIC_GETTERS: dict[str, Callable[[PipelineParams], float]] = {
    "frame_size_s": lambda p: p.framing.frame_size_s,
    "step_fraction": lambda p: p.framing.step_fraction,
    "delta_low": lambda p: p.thresholds.delta_low,
    "delta_high": lambda p: p.thresholds.delta_high,
}


def _split_history(history: Sequence[Trial], gamma: float) -> tuple[list[Trial], list[Trial]]:
    order = sorted(range(len(history)), key=lambda i: (history[i].objective, i))
    n_good = max(1, min(len(history) - 1, math.ceil(gamma * len(history))))
    good_idx = set(order[:n_good])
    good = [history[i] for i in sorted(good_idx)]
    bad = [history[i] for i in range(len(history)) if i not in good_idx]
    return good, bad


def tpe_suggest(
    history: Sequence[Trial],
    space: ParamSpace,
    config: TpeConfig,
    rng: np.random.Generator | None = None,
) -> PipelineParams:
    """Propose the next parameter vector.

    Below n_startup trials this is a prior draw.  Afterwards the history is
    split at the gamma quantile of the objective into a good set and a bad
    set, per-dimension Parzen densities l and g are fitted, n_candidates
    are drawn from l, and the candidate maximizing l/g (in log space,
    summed over dimensions) is returned.  delta_low < delta_high is
    enforced on every candidate the same way the prior enforces it.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if len(history) < config.n_startup:
        return sample_prior(space, rng)
    for name in NUMERIC_PARAM_NAMES:
        if isinstance(space.numeric(name), GridRange):
            raise ValueError("TPE needs distribution-form numeric dimensions")

    good, bad = _split_history(history, config.gamma_quantile)
    models_l: dict[str, _ParzenNumeric | _ParzenCategorical] = {}
    models_g: dict[str, _ParzenNumeric | _ParzenCategorical] = {}
    for name, getter in _NUMERIC_GETTERS.items():
        dist = space.numeric(name)
        models_l[name] = _ParzenNumeric([getter(t.params) for t in good], dist)
        models_g[name] = _ParzenNumeric([getter(t.params) for t in bad], dist)
    models_l["classifier"] = _ParzenCategorical(
        [t.params.classifier for t in good], space.classifier_choices
    )
    models_g["classifier"] = _ParzenCategorical(
        [t.params.classifier for t in bad], space.classifier_choices
    )
    models_l["timing"] = _ParzenCategorical([t.params.timing for t in good], space.timing_choices)
    models_g["timing"] = _ParzenCategorical([t.params.timing for t in bad], space.timing_choices)

    best_params = None
    best_score = -math.inf
    for _ in range(config.n_candidates):
        classifier = models_l["classifier"].sample(rng)
        timing = models_l["timing"].sample(rng)
        frame = models_l["frame_size_s"].sample(rng)
        step = models_l["step_fraction"].sample(rng)
        low = high = 0.0
        for _ in range(_MAX_PAIR_ATTEMPTS):
            low = models_l["delta_low"].sample(rng)
            high = models_l["delta_high"].sample(rng)
            if low < high:
                break
        else:
            if low > high:
                low, high = high, low
            elif low == high:
                high = low + 1e-6
        candidate = PipelineParams(
            classifier=classifier,
            timing=timing,
            framing=FramingParams(frame_size_s=frame, step_fraction=step),
            thresholds=Thresholds(delta_low=low, delta_high=high),
        )
        score = 0.0
        for name, getter in _NUMERIC_GETTERS.items():
            x = getter(candidate)
            score += models_l[name].log_pdf(x) - models_g[name].log_pdf(x)
        score += models_l["classifier"].log_pdf(classifier) - models_g["classifier"].log_pdf(
            classifier
        )
        score += models_l["timing"].log_pdf(timing) - models_g["timing"].log_pdf(timing)
        if score > best_score:
            best_score = score
            best_params = candidate
    assert best_params is not None
    return best_params


def tpe_optimize(
    space: ParamSpace,
    kind: ObjectiveKind,
    dataset: Sequence[AnnotatedRecording],
    n_trials: int,
    config: TpeConfig = TpeConfig(),
    model: HeadModel | None = None,
    options: PipelineOptions = DEFAULT_OPTIONS,
    lam: float = DEFAULT_LAMBDA,
) -> tuple[Trial, list[Trial]]:
    """Sequential suggest-evaluate-record loop; deterministic given the seed.

    With n_trials = n_startup this degenerates to pure random search (same
    prior, same stream).
    """
    if n_trials < config.n_startup:
        raise ValueError("n_trials must be >= n_startup")
    evaluator = _DatasetEvaluator(dataset, kind, model, options, lam)
    rng = np.random.default_rng(config.seed)
    history: list[Trial] = []
    for _ in range(n_trials):
        params = tpe_suggest(history, space, config, rng)
        history.append(evaluator(params))
    return _pick_best(history), history


def random_search(
    space: ParamSpace,
    kind: ObjectiveKind,
    dataset: Sequence[AnnotatedRecording],
    n_trials: int,
    seed: int = 0,
    model: HeadModel | None = None,
    options: PipelineOptions = DEFAULT_OPTIONS,
    lam: float = DEFAULT_LAMBDA,
) -> tuple[Trial | None, list[Trial]]:
    """Prior-only baseline on the same evaluation path as TPE.

    Returns (None, []) for a zero-trial budget.
    """
    if n_trials < 0:
        raise ValueError("n_trials must be >= 0")
    if n_trials == 0:
        return None, []
    evaluator = _DatasetEvaluator(dataset, kind, model, options, lam)
    rng = np.random.default_rng(seed)
    trials = [evaluator(sample_prior(space, rng)) for _ in range(n_trials)]
    return _pick_best(trials), trials


def tpe_minimize(
    space: ParamSpace,
    objective_fn: Callable[[PipelineParams], float],
    n_trials: int,
    config: TpeConfig = TpeConfig(),
) -> tuple[Trial, list[Trial]]:
    """TPE against an arbitrary objective (surrogate benchmarks)."""
    if n_trials < config.n_startup:
        raise ValueError("n_trials must be >= n_startup")
    rng = np.random.default_rng(config.seed)
    history: list[Trial] = []
    for _ in range(n_trials):
        params = tpe_suggest(history, space, config, rng)
        value = float(objective_fn(params))
        history.append(Trial(params, (), value, True))
    return _pick_best(history), history


def random_minimize(
    space: ParamSpace,
    objective_fn: Callable[[PipelineParams], float],
    n_trials: int,
    seed: int = 0,
) -> tuple[Trial | None, list[Trial]]:
    """Random search against an arbitrary objective (surrogate benchmarks)."""
    if n_trials == 0:
        return None, []
    rng = np.random.default_rng(seed)
    trials = []
    for _ in range(n_trials):
        params = sample_prior(space, rng)
        trials.append(Trial(params, (), float(objective_fn(params)), True))
    return _pick_best(trials), trials


# ---------------------------------------------------------------------------
# Exports


@dataclass(frozen=True)
class ContourGrid:
    x_param: str
    y_param: str
    stat: str
    x_edges: np.ndarray
    y_edges: np.ndarray
    cells: tuple[tuple[float | None, ...], ...]  # rows indexed by y bin

    @property
    def x_centers(self) -> np.ndarray:
        return 0.5 * (self.x_edges[:-1] + self.x_edges[1:])

    @property
    def y_centers(self) -> np.ndarray:
        return 0.5 * (self.y_edges[:-1] + self.y_edges[1:])


def _numeric_value(params: PipelineParams, name: str) -> float:
    if name not in _NUMERIC_GETTERS:
        raise ValueError(f"unknown parameter {name!r}; numeric axes are {NUMERIC_PARAM_NAMES}")
    return _NUMERIC_GETTERS[name](params)


def _bin_edges(values: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


def contour_export(
    trials: Sequence[Trial],
    x_axis: str,
    y_axis: str,
    stat: str = "min",
    bins: int = 20,
) -> ContourGrid:
    """Bin trials on two numeric axes and aggregate the objective per cell.

    Cells no trial landed in stay empty (None) — the white regions of a
    contour plot.
    """
    if stat not in ("min", "mean"):
        raise ValueError("stat must be 'min' or 'mean'")
    if not trials:
        raise ValueError("no trials to export")
    xs = np.array([_numeric_value(t.params, x_axis) for t in trials])
    ys = np.array([_numeric_value(t.params, y_axis) for t in trials])
    objs = np.array([t.objective for t in trials])
    x_edges = _bin_edges(xs, bins)
    y_edges = _bin_edges(ys, bins)
    xi = np.clip(np.searchsorted(x_edges, xs, side="right") - 1, 0, bins - 1)
    yi = np.clip(np.searchsorted(y_edges, ys, side="right") - 1, 0, bins - 1)
    cells: list[list[float | None]] = [[None] * bins for _ in range(bins)]
    buckets: dict[tuple[int, int], list[float]] = {}
    for i in range(len(trials)):
        buckets.setdefault((int(yi[i]), int(xi[i])), []).append(float(objs[i]))
    for (row, col), vals in buckets.items():
        cells[row][col] = min(vals) if stat == "min" else float(np.mean(vals))
    return ContourGrid(
        x_param=x_axis,
        y_param=y_axis,
        stat=stat,
        x_edges=x_edges,
        y_edges=y_edges,
        cells=tuple(tuple(row) for row in cells),
    )


def write_contour_csv(grid: ContourGrid, path: str | Path) -> None:
    """Matrix CSV: first row = x bin centers, first column = y bin centers."""
    lines = [f"# objective {grid.stat} over x={grid.x_param} y={grid.y_param}"]
    header = ["y_center/x_center"] + [format(c, ".12g") for c in grid.x_centers]
    lines.append(",".join(header))
    for row, y in zip(grid.cells, grid.y_centers):
        cells = ["" if v is None else format(v, ".12g") for v in row]
        lines.append(",".join([format(y, ".12g")] + cells))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Serialization


def params_to_dict(params: PipelineParams) -> dict:
    return {
        "classifier": params.classifier.value,
        "timing": params.timing.value,
        "frame_size_s": params.framing.frame_size_s,
        "step_fraction": params.framing.step_fraction,
        "delta_low": params.thresholds.delta_low,
        "delta_high": params.thresholds.delta_high,
    }


def params_from_dict(data: dict) -> PipelineParams:
    return PipelineParams(
        classifier=ClassifierKind(data["classifier"]),
        timing=WeightingKind(data["timing"]),
        framing=FramingParams(
            frame_size_s=float(data["frame_size_s"]),
            step_fraction=float(data["step_fraction"]),
        ),
        thresholds=Thresholds(
            delta_low=float(data["delta_low"]), delta_high=float(data["delta_high"])
        ),
    )


def _dist_to_dict(dist: NumericDist) -> dict:
    if isinstance(dist, GridRange):
        return {"grid": {"min": dist.lo, "max": dist.hi, "step": dist.step}}
    if isinstance(dist, UniformRange):
        return {"uniform": {"min": dist.lo, "max": dist.hi}}
    return {"normal": {"mean": dist.mean, "std": dist.std}}


def _dist_from_dict(data: dict) -> NumericDist:
    if len(data) != 1:
        raise ValueError(f"expected exactly one distribution form, got {sorted(data)}")
    form, body = next(iter(data.items()))
    if form == "grid":
        return GridRange(body["min"], body["max"], body["step"])
    if form == "uniform":
        return UniformRange(body["min"], body["max"])
    if form == "normal":
        return NormalPrior(body["mean"], body["std"])
    raise ValueError(f"unknown distribution form {form!r}")


def space_to_dict(space: ParamSpace) -> dict:
    return {
        "classifier": [c.value for c in space.classifier_choices],
        "timing": [w.value for w in space.timing_choices],
        "frame_size": _dist_to_dict(space.frame_size),
        "step_fraction": _dist_to_dict(space.step_fraction),
        "delta_low": _dist_to_dict(space.delta_low),
        "delta_high": _dist_to_dict(space.delta_high),
    }


def space_from_dict(data: dict) -> ParamSpace:
    return ParamSpace(
        classifier_choices=tuple(ClassifierKind(c) for c in data["classifier"]),
        timing_choices=tuple(WeightingKind(w) for w in data["timing"]),
        frame_size=_dist_from_dict(data["frame_size"]),
        step_fraction=_dist_from_dict(data["step_fraction"]),
        delta_low=_dist_from_dict(data["delta_low"]),
        delta_high=_dist_from_dict(data["delta_high"]),
    )


def load_space_json(path: str | Path) -> ParamSpace:
    return space_from_dict(json.loads(Path(path).read_text()))


def _metrics_to_dict(m: Metrics) -> dict:
    return {
        "f1": m.f1,
        "mse": None if math.isnan(m.mse) else m.mse,
        "n_accepted": m.n_accepted,
        "n_frames": m.n_frames,
        "no_speech": m.no_speech,
    }


def _metrics_from_dict(data: dict) -> Metrics:
    return Metrics(
        f1=data["f1"],
        mse=math.nan if data["mse"] is None else data["mse"],
        n_accepted=data["n_accepted"],
        n_frames=data["n_frames"],
        no_speech=data["no_speech"],
    )


def trial_to_dict(trial: Trial) -> dict:
    return {
        "params": params_to_dict(trial.params),
        "objective": trial.objective,
        "valid": trial.valid,
        "per_recording": [_metrics_to_dict(m) for m in trial.per_recording],
    }


def trial_from_dict(data: dict) -> Trial:
    return Trial(
        params=params_from_dict(data["params"]),
        per_recording=tuple(_metrics_from_dict(m) for m in data["per_recording"]),
        objective=data["objective"],
        valid=data["valid"],
    )


def write_trials_jsonl(trials: Sequence[Trial], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for t in trials:
            fh.write(json.dumps(trial_to_dict(t)) + "\n")


def read_trials_jsonl(path: str | Path) -> list[Trial]:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(trial_from_dict(json.loads(line)))
    return out


def presentation_rounding(params: PipelineParams) -> PipelineParams:
    """Round a tuned vector to presentation-friendly increments.

    Frame size to 10 ms, step fraction to 0.05, thresholds to 0.1.  Exports
    always carry unrounded values; this is for human-facing summaries only.
    """
    return PipelineParams(
        classifier=params.classifier,
        timing=params.timing,
        framing=FramingParams(
            frame_size_s=round(round(params.framing.frame_size_s / 0.01) * 0.01, 10),
            step_fraction=round(round(params.framing.step_fraction / 0.05) * 0.05, 10),
        ),
        thresholds=Thresholds(
            delta_low=round(params.thresholds.delta_low, 1),
            delta_high=round(params.thresholds.delta_high, 1),
        ),
    )
