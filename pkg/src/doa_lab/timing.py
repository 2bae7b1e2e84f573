"""Time-delay estimation between two channels.

Spectral generalized cross-correlation with selectable weighting, a direct
time-domain correlator used as an oracle, and a peak-prominence measure.

Sign convention (used everywhere downstream): positive lag means the LEFT
channel leads, i.e. the right channel is a delayed copy.  A source on the
left produces a positive lag and, through :mod:`doa_lab.geometry`, a
positive azimuth.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import SilentFrameError
from .geometry import HeadModel, max_feasible_itd
from .signals import MonoSignal

__all__ = [
    "WeightingKind",
    "CrossCorrelogram",
    "TdeResult",
    "cross_power_spectrum",
    "apply_weighting",
    "gcc",
    "time_domain_xcorr",
    "peak_prominence",
    "default_max_lag",
]

# Relative guard for the PHAT/SCOT denominators: bins whose magnitude falls
# below RELATIVE_EPSILON * max magnitude are divided by the guard instead.
RELATIVE_EPSILON = 1e-12


class WeightingKind(enum.Enum):
    """Cross-power weighting applied before the inverse transform."""

    PLAIN_CC = "cc"
    PHAT = "phat"
    SCOT = "scot"


@dataclass(frozen=True)
class CrossCorrelogram:
    """Correlation values indexed by integer lag in [-max_lag, +max_lag]."""

    values: np.ndarray
    max_lag: int
    sample_rate: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.max_lag < 1:
            raise ValueError("max_lag must be >= 1")
        if values.ndim != 1 or len(values) != 2 * self.max_lag + 1:
            raise ValueError("values must have length 2*max_lag + 1")
        if not np.all(np.isfinite(values)):
            raise ValueError("correlogram values must be finite")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.max_lag, self.max_lag + 1)

    @property
    def lag_times_s(self) -> np.ndarray:
        return self.lags / self.sample_rate

    def value_at(self, lag: int) -> float:
        if abs(lag) > self.max_lag:
            raise ValueError(f"lag {lag} outside [-{self.max_lag}, {self.max_lag}]")
        return float(self.values[lag + self.max_lag])


@dataclass(frozen=True)
class TdeResult:
    """Best lag picked from a correlogram."""

    lag_samples: int
    lag_seconds: float
    peak_value: float
    prominence: float


def default_max_lag(sample_rate: float, model: HeadModel | None = None) -> int:
    """Largest physically reachable integer lag: ceil(tau_max * fs)."""
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    if model is None:
        model = HeadModel()
    return math.ceil(max_feasible_itd(model) * sample_rate)


def cross_power_spectrum(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Element-wise X[f] * conj(Y[f])."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"spectrum length mismatch: {x.shape} vs {y.shape}")
    return x * np.conj(y)


def apply_weighting(
    g_xy: np.ndarray,
    g_xx: np.ndarray | None = None,
    g_yy: np.ndarray | None = None,
    kind: WeightingKind = WeightingKind.PLAIN_CC,
    epsilon: float = 1e-12,
) -> np.ndarray:
    """Scale each cross-power bin by the chosen weighting.

    PLAIN_CC passes g_xy through.  PHAT divides by max(|G_xy|, epsilon);
    SCOT divides by max(sqrt(G_xx * G_yy), epsilon).  The auto spectra are
    only required for SCOT.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    g_xy = np.asarray(g_xy)
    if kind is WeightingKind.PLAIN_CC:
        return g_xy.copy()
    if kind is WeightingKind.PHAT:
        denom = np.maximum(np.abs(g_xy), epsilon)
        return g_xy / denom
    if kind is WeightingKind.SCOT:
        if g_xx is None or g_yy is None:
            raise ValueError("SCOT weighting needs both auto power spectra")
        g_xx = np.asarray(g_xx)
        g_yy = np.asarray(g_yy)
        if g_xx.shape != g_xy.shape or g_yy.shape != g_xy.shape:
            raise ValueError("auto spectrum length mismatch")
        denom = np.maximum(np.sqrt(np.abs(g_xx) * np.abs(g_yy)), epsilon)
        return g_xy / denom
    raise ValueError(f"unknown weighting: {kind!r}")


def _relative_epsilon(denominator_max: float) -> float:
    return max(RELATIVE_EPSILON * denominator_max, np.finfo(np.float64).tiny)


def _pick_best_lag(values: np.ndarray, max_lag: int) -> int:
    """Index of the maximum; exact ties resolve to the smallest |lag|."""
    best = np.flatnonzero(values == values.max())
    if len(best) == 1:
        return int(best[0])
    lags = best - max_lag
    order = np.lexsort((lags, np.abs(lags)))
    return int(best[order[0]])


def gcc(
    left: MonoSignal,
    right: MonoSignal,
    kind: WeightingKind = WeightingKind.PLAIN_CC,
    max_lag_samples: int | None = None,
    zero_pad: bool = False,
) -> tuple[CrossCorrelogram, TdeResult]:
    """Generalized cross-correlation of one stereo frame.

    The correlogram is the inverse transform of the weighted cross-power
    spectrum, re-centered so lag 0 sits in the middle, and the argmax is
    searched only within [-max_lag, +max_lag].  max_lag_samples defaults to
    the physically reachable bound for the default head.

    Correlation is circular; frames are long relative to max_lag, so the
    wrap-around bias is negligible.  zero_pad=True doubles the frame with
    zeros to make the correlation linear instead.

    Raises SilentFrameError when either frame is all zeros (callers treat
    that frame as non-speech).
    """
    if len(left) != len(right):
        raise ValueError("frames must have equal length")
    if left.sample_rate != right.sample_rate:
        raise ValueError("frames must share a sample rate")
    n = len(left)
    fs = left.sample_rate
    if max_lag_samples is None:
        max_lag_samples = default_max_lag(fs)
    if not 1 <= max_lag_samples < n:
        raise ValueError(f"max_lag_samples must be in [1, {n - 1}], got {max_lag_samples}")
    x = left.samples
    y = right.samples
    if not np.any(x) or not np.any(y):
        raise SilentFrameError("silent frame: all-zero channel")
    if zero_pad:
        x = np.concatenate([x, np.zeros(n)])
        y = np.concatenate([y, np.zeros(n)])
    spec_x = np.fft.fft(x)
    spec_y = np.fft.fft(y)
    g_xy = cross_power_spectrum(spec_x, spec_y)
    if kind is WeightingKind.PLAIN_CC:
        weighted = g_xy
    elif kind is WeightingKind.PHAT:
        eps = _relative_epsilon(float(np.abs(g_xy).max()))
        weighted = apply_weighting(g_xy, kind=kind, epsilon=eps)
    else:
        g_xx = cross_power_spectrum(spec_x, spec_x).real
        g_yy = cross_power_spectrum(spec_y, spec_y).real
        denom_max = float(np.sqrt(np.abs(g_xx) * np.abs(g_yy)).max())
        eps = _relative_epsilon(denom_max)
        weighted = apply_weighting(g_xy, g_xx, g_yy, kind=kind, epsilon=eps)
    r = np.fft.ifft(weighted).real
    total = len(r)
    lags = np.arange(-max_lag_samples, max_lag_samples + 1)
    values = r[(-lags) % total]
    correlogram = CrossCorrelogram(values=values, max_lag=max_lag_samples, sample_rate=fs)
    best = _pick_best_lag(correlogram.values, max_lag_samples)
    lag = int(lags[best])
    result = TdeResult(
        lag_samples=lag,
        lag_seconds=lag / fs,
        peak_value=float(correlogram.values[best]),
        prominence=peak_prominence(correlogram),
    )
    return correlogram, result


def time_domain_xcorr(
    x: MonoSignal,
    y: MonoSignal,
    max_lag_samples: int | None = None,
) -> CrossCorrelogram:
    """Direct O(N*L) sliding-dot-product correlogram.

    value(l) = sum_n x[n] * y[n + l] over the overlapping region, so a right
    channel delayed by d peaks at lag +d, matching gcc's convention.  Serves
    as the linear-correlation oracle for gcc with PLAIN_CC.
    """
    if len(x) != len(y):
        raise ValueError("signals must have equal length")
    if x.sample_rate != y.sample_rate:
        raise ValueError("signals must share a sample rate")
    n = len(x)
    if max_lag_samples is None:
        max_lag_samples = default_max_lag(x.sample_rate)
    if not 1 <= max_lag_samples < n:
        raise ValueError(f"max_lag_samples must be in [1, {n - 1}], got {max_lag_samples}")
    a = x.samples
    b = y.samples
    values = np.empty(2 * max_lag_samples + 1)
    for i, lag in enumerate(range(-max_lag_samples, max_lag_samples + 1)):
        if lag >= 0:
            values[i] = float(np.dot(a[: n - lag], b[lag:]))
        else:
            values[i] = float(np.dot(a[-lag:], b[: n + lag]))
    return CrossCorrelogram(values=values, max_lag=max_lag_samples, sample_rate=x.sample_rate)


def peak_prominence(correlogram: CrossCorrelogram) -> float:
    """Global max divided by the strongest competing local maximum.

    Competitors are positive local maxima at least 2 lags away from the
    global peak; endpoints count, compared one-sided.  Returns +inf when no
    competitor exists (single clean peak).
    """
    values = correlogram.values
    n = len(values)
    if n < 3:
        raise ValueError("correlogram needs at least 3 lags")
    g = int(np.argmax(values))
    peak = float(values[g])
    interior = values[1:-1]
    is_local = np.zeros(n, dtype=bool)
    is_local[1:-1] = (interior >= values[:-2]) & (interior >= values[2:])
    is_local[0] = values[0] >= values[1]
    is_local[-1] = values[-1] >= values[-2]
    idx = np.flatnonzero(is_local & (values > 0.0) & (np.abs(np.arange(n) - g) >= 2))
    if len(idx) == 0:
        return math.inf
    competitor = float(values[idx].max())
    return peak / competitor


def _gcc_batch(
    left_frames: np.ndarray,
    right_frames: np.ndarray,
    sample_rate: float,
    kind: WeightingKind,
    max_lag_samples: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized gcc over stacked frames (one frame per row).

    Returns (lags, values) with values of shape (n_frames, 2*max_lag + 1).
    Kept numerically equivalent to per-frame gcc; covered by equivalence
    tests.  Uses the real-input transform, which matches the full transform
    for real frames up to rounding.
    """
    if left_frames.shape != right_frames.shape:
        raise ValueError("frame blocks must have equal shape")
    if left_frames.ndim != 2:
        raise ValueError("frame blocks must be 2-D")
    n = left_frames.shape[1]
    if not 1 <= max_lag_samples < n:
        raise ValueError(f"max_lag_samples must be in [1, {n - 1}], got {max_lag_samples}")
    silent = ~(np.any(left_frames, axis=1) & np.any(right_frames, axis=1))
    if np.any(silent):
        raise SilentFrameError(f"silent frame at rows {np.flatnonzero(silent).tolist()}")
    spec_x = np.fft.rfft(left_frames, axis=1)
    spec_y = np.fft.rfft(right_frames, axis=1)
    g_xy = spec_x * np.conj(spec_y)
    if kind is WeightingKind.PLAIN_CC:
        weighted = g_xy
    elif kind is WeightingKind.PHAT:
        mag = np.abs(g_xy)
        eps = np.maximum(RELATIVE_EPSILON * mag.max(axis=1, keepdims=True), np.finfo(np.float64).tiny)
        weighted = g_xy / np.maximum(mag, eps)
    elif kind is WeightingKind.SCOT:
        denom = np.abs(spec_x) * np.abs(spec_y)
        eps = np.maximum(RELATIVE_EPSILON * denom.max(axis=1, keepdims=True), np.finfo(np.float64).tiny)
        weighted = g_xy / np.maximum(denom, eps)
    else:
        raise ValueError(f"unknown weighting: {kind!r}")
    r = np.fft.irfft(weighted, n=n, axis=1)
    lags = np.arange(-max_lag_samples, max_lag_samples + 1)
    values = r[:, (-lags) % n]
    return lags, values


def _best_lags_batch(lags: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Per-row argmax with the same smallest-|lag| tie rule as gcc."""
    # columns ordered by (|lag|, lag); first max hit in that order wins
    order = np.lexsort((lags, np.abs(lags)))
    reordered = values[:, order]
    picks = np.argmax(reordered == values.max(axis=1, keepdims=True), axis=1)
    return lags[order[picks]]


def _prominence_batch(values: np.ndarray) -> np.ndarray:
    """peak_prominence over stacked correlograms (one per row)."""
    m, k = values.shape
    if k < 3:
        raise ValueError("correlograms need at least 3 lags")
    g = np.argmax(values, axis=1)
    peak = values[np.arange(m), g]
    is_local = np.zeros_like(values, dtype=bool)
    is_local[:, 1:-1] = (values[:, 1:-1] >= values[:, :-2]) & (values[:, 1:-1] >= values[:, 2:])
    is_local[:, 0] = values[:, 0] >= values[:, 1]
    is_local[:, -1] = values[:, -1] >= values[:, -2]
    far = np.abs(np.arange(k)[None, :] - g[:, None]) >= 2
    candidates = np.where(is_local & far & (values > 0.0), values, -np.inf)
    competitor = candidates.max(axis=1)
    with np.errstate(divide="ignore"):
        return np.where(competitor > 0.0, peak / competitor, np.inf)
