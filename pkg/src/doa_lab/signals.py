"""Signal containers, framing, spectral transforms and envelope extraction.

Everything downstream (correlators, classifiers, the scene generator)
works in terms of the two container types defined here.  Values are
immutable after construction: the sample buffers are marked read-only so
they can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import hilbert

__all__ = [
    "MonoSignal",
    "StereoSignal",
    "Spectrum",
    "FramingParams",
    "frame_stream",
    "frame_positions",
    "forward_transform",
    "inverse_transform",
    "analytic_envelope",
    "frame_power",
    "read_wav",
    "write_wav",
]

DEFAULT_SAMPLE_RATE = 16000.0

_PCM16_SCALE = 32768.0


def _as_readonly(samples) -> np.ndarray:
    arr = np.ascontiguousarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sample sequence, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MonoSignal:
    """A single channel of finite samples at a fixed rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_readonly(self.samples))
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("samples contain NaN or Inf")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class StereoSignal:
    """Two synchronized channels with a common rate and length."""

    left: MonoSignal
    right: MonoSignal

    def __post_init__(self):
        if self.left.sample_rate != self.right.sample_rate:
            raise ValueError("channel sample rates differ")
        if len(self.left) != len(self.right):
            raise ValueError("channel lengths differ")

    @property
    def sample_rate(self) -> float:
        return self.left.sample_rate

    def __len__(self) -> int:
        return len(self.left)

    @property
    def duration_s(self) -> float:
        return self.left.duration_s

    def mono_mix(self) -> MonoSignal:
        """Mean of the two channels."""
        mix = 0.5 * (self.left.samples + self.right.samples)
        return MonoSignal(mix, self.sample_rate)

    def swapped(self) -> "StereoSignal":
        return StereoSignal(self.right, self.left)


@dataclass(frozen=True)
class Spectrum:
    """Full complex transform of one frame.

    ``length`` is the frame length in samples; the bin count equals it.
    """

    bins: np.ndarray
    sample_rate: float
    length: int

    def __post_init__(self):
        bins = np.ascontiguousarray(self.bins, dtype=np.complex128)
        bins.flags.writeable = False
        object.__setattr__(self, "bins", bins)
        if bins.size != self.length:
            raise ValueError(f"expected {self.length} bins, got {bins.size}")


@dataclass(frozen=True)
class FramingParams:
    """Analysis window length and hop, the framing half of the parameter
    vector searched by the optimizer."""

    frame_size_s: float
    step_fraction: float

    def __post_init__(self):
        if not self.frame_size_s > 0:
            raise ValueError(f"frame_size_s must be positive, got {self.frame_size_s}")
        if not 0 < self.step_fraction <= 1:
            raise ValueError(f"step_fraction must be in (0, 1], got {self.step_fraction}")

    @property
    def hop_s(self) -> float:
        return self.frame_size_s * self.step_fraction

    def frame_samples(self, sample_rate: float) -> int:
        return max(int(round(self.frame_size_s * sample_rate)), 1)

    def hop_samples(self, sample_rate: float) -> int:
        return max(int(round(self.hop_s * sample_rate)), 1)


def frame_positions(n_samples: int, params: FramingParams, sample_rate: float) -> np.ndarray:
    """Start indices of every complete frame; empty when the signal is
    shorter than one frame."""
    flen = params.frame_samples(sample_rate)
    hop = params.hop_samples(sample_rate)
    if n_samples < flen:
        return np.empty(0, dtype=np.intp)
    n_frames = (n_samples - flen) // hop + 1
    return np.arange(n_frames, dtype=np.intp) * hop


def frame_stream(signal: MonoSignal, params: FramingParams):
    """Split a signal into complete frames.

    Yields (start_time_s, frame) pairs at 0, hop, 2*hop, ...; a trailing
    partial frame is dropped.  A signal shorter than one frame yields
    nothing.
    """
    flen = params.frame_samples(signal.sample_rate)
    if flen < 2:
        raise ValueError("frame length must be at least 2 samples")
    starts = frame_positions(len(signal), params, signal.sample_rate)
    for start in starts:
        frame = MonoSignal(signal.samples[start:start + flen], signal.sample_rate)
        yield start / signal.sample_rate, frame


def frame_matrix(signal: MonoSignal, params: FramingParams) -> tuple[np.ndarray, np.ndarray]:
    """All complete frames stacked as rows, plus their start times.

    Batch counterpart of :func:`frame_stream`; the rows are views-copied
    into one contiguous array so they can be transformed in a single call.
    """
    flen = params.frame_samples(signal.sample_rate)
    starts = frame_positions(len(signal), params, signal.sample_rate)
    if starts.size == 0:
        return np.empty((0, flen)), np.empty(0)
    hop = params.hop_samples(signal.sample_rate)
    strides = (signal.samples.strides[0] * hop, signal.samples.strides[0])
    view = np.lib.stride_tricks.as_strided(
        signal.samples, shape=(starts.size, flen), strides=strides, writeable=False
    )
    return np.array(view), starts / signal.sample_rate


def forward_transform(frame: MonoSignal) -> Spectrum:
    """Full complex transform of one frame (no analysis window)."""
    if len(frame) == 0:
        raise ValueError("cannot transform an empty frame")
    return Spectrum(np.fft.fft(frame.samples), frame.sample_rate, len(frame))


def inverse_transform(spectrum: Spectrum) -> MonoSignal:
    """Inverse of :func:`forward_transform`; imaginary residue is dropped."""
    if spectrum.length == 0:
        raise ValueError("cannot invert an empty spectrum")
    samples = np.fft.ifft(spectrum.bins, n=spectrum.length).real
    return MonoSignal(samples, spectrum.sample_rate)


def analytic_envelope(frame: MonoSignal) -> MonoSignal:
    """Magnitude of the analytic signal.

    Non-negative and the same length as the input.  Edge taper makes the
    first/last ~10% unreliable; interior values track the instantaneous
    amplitude.
    """
    if len(frame) < 8:
        raise ValueError(f"frame too short for envelope extraction: {len(frame)} samples")
    env = np.abs(hilbert(frame.samples))
    return MonoSignal(env, frame.sample_rate)


def envelope_matrix(frames: np.ndarray) -> np.ndarray:
    """Row-wise analytic envelope of a frame matrix."""
    if frames.shape[1] < 8:
        raise ValueError(f"frames too short for envelope extraction: {frames.shape[1]} samples")
    return np.abs(hilbert(frames, axis=1))


def frame_power(frame: MonoSignal) -> float:
    """Mean squared sample value."""
    if len(frame) == 0:
        raise ValueError("cannot compute power of an empty frame")
    return float(np.mean(frame.samples ** 2))


def write_wav(path, signal: MonoSignal | StereoSignal, encoding: str = "float32") -> None:
    """Write mono or stereo WAV.

    encoding: "float32" (exact round trip) or "pcm16" (clipped to [-1, 1)).
    """
    if isinstance(signal, StereoSignal):
        data = np.stack([signal.left.samples, signal.right.samples], axis=1)
    else:
        data = signal.samples
    if encoding == "float32":
        out = data.astype(np.float32)
    elif encoding == "pcm16":
        clipped = np.clip(data, -1.0, 32767.0 / _PCM16_SCALE)
        out = np.round(clipped * _PCM16_SCALE).astype(np.int16)
    else:
        raise ValueError(f"unsupported encoding {encoding!r}")
    wavfile.write(str(path), int(round(signal.sample_rate)), out)


def read_wav(path) -> MonoSignal | StereoSignal:
    """Read a WAV file written in PCM16 or float32/float64.

    Integer samples are rescaled to [-1, 1); floats pass through.
    """
    path = Path(path)
    rate, data = wavfile.read(str(path))
    if data.dtype == np.int16:
        data = data.astype(np.float64) / _PCM16_SCALE
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    else:
        data = data.astype(np.float64)
    if data.ndim == 1:
        return MonoSignal(data, float(rate))
    if data.ndim == 2 and data.shape[1] == 2:
        return StereoSignal(MonoSignal(data[:, 0], float(rate)), MonoSignal(data[:, 1], float(rate)))
    raise ValueError(f"unsupported channel layout in {path.name}: shape {data.shape}")
