"""Per-frame speech/non-speech decision.

Two frame statistics are implemented: the power-onset ratio (energy of a
frame against its predecessor, sample by sample) and a lightweight
speech-to-reverberation modulation ratio (SRMR) computed from the envelope
spectrum.  A frame counts as speech when the statistic falls strictly
between two thresholds; the upper threshold discriminates against very
loud onsets such as impacts and self-noise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .signals import MonoSignal, analytic_envelope, envelope_matrix, frame_power

__all__ = [
    "Thresholds",
    "ClassifierKind",
    "ModulationFilterbank",
    "DEFAULT_FILTERBANK",
    "DEFAULT_FLOOR_EPS",
    "MIN_CONFIDENT_SRMR_DURATION_S",
    "power_onset_ratio",
    "srmr",
    "classify",
    "srmr_is_low_confidence",
]

DEFAULT_FLOOR_EPS = 1e-10

# One full period of the slowest (4 Hz) modulation band; SRMR on shorter
# frames is allowed but carries low confidence.
MIN_CONFIDENT_SRMR_DURATION_S = 0.25

# Standard modulation filterbank centers (Hz), log-spaced from 4 to 128.
_BAND_CENTERS_HZ = (4.0, 6.5, 10.7, 17.6, 28.9, 47.5, 78.1, 128.0)


@dataclass(frozen=True)
class Thresholds:
    """Acceptance band for the classifier statistic."""

    delta_low: float
    delta_high: float

    def __post_init__(self):
        if not 0 < self.delta_low < self.delta_high:
            raise ValueError(
                f"need 0 < delta_low < delta_high, got ({self.delta_low}, {self.delta_high})"
            )


class ClassifierKind(enum.Enum):
    POWER_ONSET = "po"
    SRMR = "srmr"


def _geometric_edges(centers: tuple[float, ...]) -> tuple[float, ...]:
    """Band edges at geometric midpoints, extended symmetrically outward."""
    inner = [math.sqrt(a * b) for a, b in zip(centers[:-1], centers[1:])]
    first = centers[0] ** 2 / inner[0]
    last = centers[-1] ** 2 / inner[-1]
    return (first, *inner, last)


@dataclass(frozen=True)
class ModulationFilterbank:
    """Eight modulation bands over the envelope spectrum."""

    band_centers_hz: tuple[float, ...] = _BAND_CENTERS_HZ
    band_edges_hz: tuple[float, ...] | None = None

    def __post_init__(self):
        centers = tuple(float(c) for c in self.band_centers_hz)
        object.__setattr__(self, "band_centers_hz", centers)
        if len(centers) != 8:
            raise ValueError("expected 8 band centers")
        if any(b <= a for a, b in zip(centers[:-1], centers[1:])):
            raise ValueError("band centers must be strictly increasing")
        if centers[0] != 4.0:
            raise ValueError("lowest band center must be 4 Hz")
        edges = self.band_edges_hz
        if edges is None:
            edges = _geometric_edges(centers)
        edges = tuple(float(e) for e in edges)
        object.__setattr__(self, "band_edges_hz", edges)
        if len(edges) != len(centers) + 1:
            raise ValueError("expected one more edge than centers")
        if any(b <= a for a, b in zip(edges[:-1], edges[1:])):
            raise ValueError("band edges must be strictly increasing")

    def band_energies(self, envelope_power: np.ndarray, freqs_hz: np.ndarray) -> np.ndarray:
        """Sum spectral power between consecutive edges, per band."""
        edges = np.asarray(self.band_edges_hz)
        out = np.empty(len(self.band_centers_hz))
        for j in range(len(out)):
            mask = (freqs_hz >= edges[j]) & (freqs_hz < edges[j + 1])
            out[j] = float(envelope_power[mask].sum())
        return out


DEFAULT_FILTERBANK = ModulationFilterbank()


def power_onset_ratio(
    frame: MonoSignal,
    prev_frame: MonoSignal | None,
    floor_eps: float = DEFAULT_FLOOR_EPS,
    per_sample: bool = True,
) -> float:
    """Energy rise of a frame against its predecessor.

    The default is the per-sample mean of F_i[j]^2 / max(F_{i-1}[j]^2,
    floor_eps).  per_sample=False swaps in the ratio of whole-frame mean
    powers, which is far less heavy-tailed on steady signals.

    The first frame of a stream has no predecessor: pass None and the
    ratio is 0.0, which downstream thresholds classify as non-speech.
    """
    if not floor_eps > 0:
        raise ValueError("floor_eps must be positive")
    if prev_frame is None:
        return 0.0
    if len(frame) != len(prev_frame):
        raise ValueError("frames must have equal length")
    cur = frame.samples
    prev = prev_frame.samples
    if per_sample:
        return float(np.mean(cur**2 / np.maximum(prev**2, floor_eps)))
    return frame_power(frame) / max(frame_power(prev_frame), floor_eps)


def _power_onset_batch(
    frames: np.ndarray, floor_eps: float = DEFAULT_FLOOR_EPS, per_sample: bool = True
) -> np.ndarray:
    """power_onset_ratio over stacked frames (rows); row 0 gets 0.0."""
    n = frames.shape[0]
    out = np.zeros(n)
    if n < 2:
        return out
    if per_sample:
        ratios = frames[1:] ** 2 / np.maximum(frames[:-1] ** 2, floor_eps)
        out[1:] = ratios.mean(axis=1)
    else:
        powers = np.mean(frames**2, axis=1)
        out[1:] = powers[1:] / np.maximum(powers[:-1], floor_eps)
    return out


def srmr(
    frame: MonoSignal,
    bank: ModulationFilterbank = DEFAULT_FILTERBANK,
    floor_eps: float = DEFAULT_FLOOR_EPS,
    overlap_shared_band: bool = True,
) -> float:
    """Speech-to-reverberation modulation ratio of one frame.

    The analytic envelope is computed, its mean removed, and the envelope
    power spectrum summed into the filterbank bands e_1..e_8.  The ratio is
    (e_1+..+e_4 + floor) / (e_4+..+e_8 + floor); band 4 appears in both
    sums by default, and overlap_shared_band=False selects the plain
    1..4 / 5..8 split instead.
    """
    if not floor_eps > 0:
        raise ValueError("floor_eps must be positive")
    env = analytic_envelope(frame).samples
    env = env - env.mean()
    power = np.abs(np.fft.rfft(env)) ** 2
    freqs = np.fft.rfftfreq(len(env), d=1.0 / frame.sample_rate)
    e = bank.band_energies(power, freqs)
    return _srmr_ratio(e, floor_eps, overlap_shared_band)


def _srmr_ratio(e: np.ndarray, floor_eps: float, overlap_shared_band: bool) -> float:
    low = e[:4].sum()
    high = e[3:].sum() if overlap_shared_band else e[4:].sum()
    return float((low + floor_eps) / (high + floor_eps))


def _srmr_batch(
    frames: np.ndarray,
    sample_rate: float,
    bank: ModulationFilterbank = DEFAULT_FILTERBANK,
    floor_eps: float = DEFAULT_FLOOR_EPS,
    overlap_shared_band: bool = True,
) -> np.ndarray:
    """srmr over stacked frames (rows).  Matches the scalar path."""
    env = envelope_matrix(frames)
    env = env - env.mean(axis=1, keepdims=True)
    power = np.abs(np.fft.rfft(env, axis=1)) ** 2
    freqs = np.fft.rfftfreq(frames.shape[1], d=1.0 / sample_rate)
    edges = np.asarray(bank.band_edges_hz)
    n_bands = len(bank.band_centers_hz)
    masks = np.stack(
        [(freqs >= edges[j]) & (freqs < edges[j + 1]) for j in range(n_bands)]
    ).astype(np.float64)
    e = power @ masks.T
    low = e[:, :4].sum(axis=1)
    high = e[:, 3:].sum(axis=1) if overlap_shared_band else e[:, 4:].sum(axis=1)
    return (low + floor_eps) / (high + floor_eps)


def srmr_is_low_confidence(duration_s: float) -> bool:
    """True when the frame is shorter than one period of the 4 Hz band."""
    return duration_s < MIN_CONFIDENT_SRMR_DURATION_S


def classify(value: float, thresholds: Thresholds) -> bool:
    """Speech iff delta_low < value < delta_high, strict on both sides."""
    return thresholds.delta_low < value < thresholds.delta_high
