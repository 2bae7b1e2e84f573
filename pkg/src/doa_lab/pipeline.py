"""End-to-end direction-of-arrival pipeline.

Frames a stereo recording, classifies each frame as speech or not on the
mono mix, estimates the interaural delay on accepted frames, maps it to an
azimuth, and scores the result against annotations.  Also hosts the
annotation/manifest file formats and a simulated-streaming latency harness.

Angles are radians, times are seconds throughout; squared angle errors are
therefore radians squared.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import (
    DEFAULT_FILTERBANK,
    DEFAULT_FLOOR_EPS,
    ClassifierKind,
    ModulationFilterbank,
    Thresholds,
    _power_onset_batch,
    _srmr_batch,
    classify,
    power_onset_ratio,
    srmr,
)
from .geometry import HeadModel, angle_from_itd
from .signals import FramingParams, MonoSignal, StereoSignal, frame_matrix, read_wav
from .timing import (
    WeightingKind,
    _best_lags_batch,
    _gcc_batch,
    _prominence_batch,
    default_max_lag,
    gcc,
)

__all__ = [
    "PipelineParams",
    "PipelineOptions",
    "DoaEstimate",
    "GroundTruth",
    "AnnotatedRecording",
    "Metrics",
    "LatencyStats",
    "BEST_OVERALL_PARAMS",
    "run_pipeline",
    "ground_truth_label",
    "evaluate",
    "latency_experiment",
    "write_estimates_csv",
    "read_estimates_csv",
    "write_annotation",
    "read_annotation",
    "ground_truth_from_annotation",
    "load_recording",
    "write_manifest",
    "load_manifest",
]


@dataclass(frozen=True)
class PipelineParams:
    """The six-dimensional decision vector: what the optimizer tunes."""

    classifier: ClassifierKind
    timing: WeightingKind
    framing: FramingParams
    thresholds: Thresholds


# Best overall settings from the regularized joint search; used as the
# default operating point.
BEST_OVERALL_PARAMS = PipelineParams(
    classifier=ClassifierKind.SRMR,
    timing=WeightingKind.PHAT,
    framing=FramingParams(frame_size_s=0.34, step_fraction=0.90),
    thresholds=Thresholds(delta_low=1.5, delta_high=7.0),
)


@dataclass(frozen=True)
class PipelineOptions:
    """Fixed implementation knobs that are not part of the decision vector."""

    floor_eps: float = DEFAULT_FLOOR_EPS
    po_per_sample: bool = True
    srmr_overlap_shared_band: bool = True
    filterbank: ModulationFilterbank = DEFAULT_FILTERBANK
    max_lag_samples: int | None = None
    zero_pad: bool = False


DEFAULT_OPTIONS = PipelineOptions()


@dataclass(frozen=True)
class DoaEstimate:
    """One frame's output.

    lag_seconds, angle_rad and prominence are present iff the frame was
    accepted.  emit_time_s simulates wall-clock emission: never before the
    frame's last sample has arrived.
    """

    frame_start_s: float
    frame_size_s: float
    accepted: bool
    classifier_value: float
    lag_seconds: float | None
    angle_rad: float | None
    prominence: float | None
    emit_time_s: float

    def __post_init__(self):
        if self.emit_time_s < self.frame_start_s + self.frame_size_s - 1e-9:
            raise ValueError("emit_time_s precedes the frame's own end")
        if self.accepted and (self.lag_seconds is None or self.angle_rad is None):
            raise ValueError("accepted estimates must carry lag and angle")


@dataclass(frozen=True, kw_only=True)
class GroundTruth:
    """Annotation alone: speech intervals, angle track, weight, label.

    Enough to score an estimate sequence; carries no audio.
    """

    speech_intervals: tuple[tuple[float, float], ...]
    angle_track: tuple[tuple[float, float], ...]
    weight: int = 1
    label: str = ""

    def __post_init__(self):
        intervals = tuple((float(s), float(e)) for s, e in self.speech_intervals)
        object.__setattr__(self, "speech_intervals", intervals)
        prev_end = -math.inf
        for s, e in intervals:
            if not s < e:
                raise ValueError(f"empty or inverted interval [{s}, {e}]")
            if s < prev_end:
                raise ValueError("speech intervals must be sorted and non-overlapping")
            prev_end = e
        track = tuple((float(t), float(a)) for t, a in self.angle_track)
        object.__setattr__(self, "angle_track", track)
        if not track:
            raise ValueError("angle_track needs at least one knot")
        times = [t for t, _ in track]
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise ValueError("angle_track times must be strictly increasing")
        if int(self.weight) < 1:
            raise ValueError("weight must be a positive integer")
        object.__setattr__(self, "weight", int(self.weight))

    def angle_at(self, t: float) -> float:
        """Piecewise-linear azimuth at time t, clamped at the track ends."""
        times = np.array([k[0] for k in self.angle_track])
        angles = np.array([k[1] for k in self.angle_track])
        return float(np.interp(t, times, angles))


@dataclass(frozen=True, kw_only=True)
class AnnotatedRecording(GroundTruth):
    """Stereo audio plus its ground truth."""

    audio: StereoSignal

    def duration_s(self) -> float:
        return self.audio.duration_s


@dataclass(frozen=True)
class Metrics:
    """Per-recording score: classification F1 and angle MSE (radians^2).

    MSE is computed over true-positive frames only; when a recording has
    accepted frames but none overlap annotated speech, mse is NaN and the
    objective layer treats the trial as penalized.  no_speech marks the
    early-termination condition: not a single accepted frame.
    """

    f1: float
    mse: float
    n_accepted: int
    n_frames: int
    no_speech: bool = False


def run_pipeline(
    recording: AnnotatedRecording,
    params: PipelineParams,
    model: HeadModel | None = None,
    options: PipelineOptions = DEFAULT_OPTIONS,
) -> list[DoaEstimate]:
    """One DoaEstimate per frame position.

    The classifier sees the mono mix (mean of channels); the delay
    estimator sees both channels of accepted frames only.  Frames with an
    all-zero channel are never accepted, whatever the classifier says.
    """
    if model is None:
        model = HeadModel()
    t_begin = time.perf_counter()
    audio = recording.audio
    fs = audio.sample_rate
    mix = audio.mono_mix()
    mix_frames, starts = frame_matrix(mix, params.framing)
    n = len(starts)
    if n == 0:
        return []
    frame_s = params.framing.frame_size_s

    if params.classifier is ClassifierKind.POWER_ONSET:
        values = _power_onset_batch(
            mix_frames, floor_eps=options.floor_eps, per_sample=options.po_per_sample
        )
    else:
        values = _srmr_batch(
            mix_frames,
            fs,
            bank=options.filterbank,
            floor_eps=options.floor_eps,
            overlap_shared_band=options.srmr_overlap_shared_band,
        )
    low, high = params.thresholds.delta_low, params.thresholds.delta_high
    accepted = (values > low) & (values < high)

    left_frames, _ = frame_matrix(audio.left, params.framing)
    right_frames, _ = frame_matrix(audio.right, params.framing)
    live = np.any(left_frames, axis=1) & np.any(right_frames, axis=1)
    accepted &= live

    lags_s = np.full(n, np.nan)
    angles = np.full(n, np.nan)
    proms = np.full(n, np.nan)
    idx = np.flatnonzero(accepted)
    if len(idx) > 0:
        max_lag = options.max_lag_samples or default_max_lag(fs, model)
        if options.zero_pad:
            # scalar path handles padding; the batch path is circular only
            for i in idx:
                _, res = gcc(
                    MonoSignal(left_frames[i], fs),
                    MonoSignal(right_frames[i], fs),
                    kind=params.timing,
                    max_lag_samples=max_lag,
                    zero_pad=True,
                )
                lags_s[i] = res.lag_seconds
                proms[i] = res.prominence
        else:
            lag_axis, corr = _gcc_batch(
                left_frames[idx], right_frames[idx], fs, params.timing, max_lag
            )
            best = _best_lags_batch(lag_axis, corr)
            lags_s[idx] = best / fs
            proms[idx] = _prominence_batch(corr)
        # integer lags take few distinct values; invert each once
        unique_angles = {
            lag: angle_from_itd(lag, model)[0] for lag in set(lags_s[idx])
        }
        for i in idx:
            angles[i] = unique_angles[lags_s[i]]

    per_frame_cost = (time.perf_counter() - t_begin) / n
    out = []
    for i in range(n):
        acc = bool(accepted[i])
        out.append(
            DoaEstimate(
                frame_start_s=float(starts[i]),
                frame_size_s=frame_s,
                accepted=acc,
                classifier_value=float(values[i]),
                lag_seconds=float(lags_s[i]) if acc else None,
                angle_rad=float(angles[i]) if acc else None,
                prominence=float(proms[i]) if acc else None,
                emit_time_s=float(starts[i]) + frame_s + per_frame_cost,
            )
        )
    return out


def ground_truth_label(
    frame_start_s: float, frame_size_s: float, truth: GroundTruth
) -> bool:
    """True iff at least half the frame overlaps annotated speech."""
    s0, s1 = frame_start_s, frame_start_s + frame_size_s
    overlap = 0.0
    for a, b in truth.speech_intervals:
        overlap += max(0.0, min(s1, b) - max(s0, a))
    return overlap >= 0.5 * frame_size_s


def evaluate(estimates: list[DoaEstimate], truth: GroundTruth) -> Metrics:
    """F1 from the accepted-vs-ground-truth confusion; MSE over true positives.

    The reference angle is the track interpolated at each frame's center.
    Zero accepted frames raises the no_speech marker instead of scoring.
    """
    n_frames = len(estimates)
    n_accepted = sum(1 for e in estimates if e.accepted)
    if n_accepted == 0:
        return Metrics(f1=0.0, mse=math.nan, n_accepted=0, n_frames=n_frames, no_speech=True)
    tp = fp = fn = 0
    sq_errors = []
    for e in estimates:
        is_speech = ground_truth_label(e.frame_start_s, e.frame_size_s, truth)
        if e.accepted and is_speech:
            tp += 1
            center = e.frame_start_s + 0.5 * e.frame_size_s
            err = e.angle_rad - truth.angle_at(center)
            sq_errors.append(err * err)
        elif e.accepted:
            fp += 1
        elif is_speech:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    mse = float(np.mean(sq_errors)) if sq_errors else math.nan
    return Metrics(f1=f1, mse=mse, n_accepted=n_accepted, n_frames=n_frames)


@dataclass(frozen=True)
class LatencyStats:
    """Latency from a speech onset to the first accepted estimate's emission."""

    frame_size_s: float
    latencies_s: tuple[float, ...]
    n_dropped: int

    @property
    def mean_s(self) -> float:
        return float(np.mean(self.latencies_s)) if self.latencies_s else math.nan

    @property
    def std_s(self) -> float:
        return float(np.std(self.latencies_s, ddof=1)) if len(self.latencies_s) > 1 else 0.0


def latency_experiment(
    recording: AnnotatedRecording,
    params: PipelineParams,
    model: HeadModel | None = None,
    n_repeats: int = 1,
    options: PipelineOptions = DEFAULT_OPTIONS,
) -> LatencyStats:
    """Simulated streaming latency per speech onset.

    Samples arrive in real-time order, so a frame starting at t becomes
    available at t + frame_size; each frame is then processed one at a
    time with its processing span measured, and an accepted estimate is
    emitted at availability + processing time.  The latency of an onset is
    the emission time of the first accepted frame starting at or after the
    onset (and before the next onset), minus the onset time.  Onsets with
    no such frame are dropped and counted.
    """
    if model is None:
        model = HeadModel()
    onsets = [s for s, _ in recording.speech_intervals]
    if not onsets:
        raise ValueError("recording has no speech onset")
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    audio = recording.audio
    fs = audio.sample_rate
    mix = audio.mono_mix()
    mix_frames, starts = frame_matrix(mix, params.framing)
    left_frames, _ = frame_matrix(audio.left, params.framing)
    right_frames, _ = frame_matrix(audio.right, params.framing)
    frame_s = params.framing.frame_size_s
    max_lag = options.max_lag_samples or default_max_lag(fs, model)

    latencies = []
    n_dropped = 0
    for _ in range(n_repeats):
        emits = []  # (frame_start, emit_time) of accepted frames
        prev = None
        for i in range(len(starts)):
            frame = MonoSignal(mix_frames[i], fs)
            t0 = time.perf_counter()
            if params.classifier is ClassifierKind.POWER_ONSET:
                value = power_onset_ratio(
                    frame, prev, floor_eps=options.floor_eps, per_sample=options.po_per_sample
                )
            else:
                value = srmr(
                    frame,
                    bank=options.filterbank,
                    floor_eps=options.floor_eps,
                    overlap_shared_band=options.srmr_overlap_shared_band,
                )
            ok = classify(value, params.thresholds)
            if ok and np.any(left_frames[i]) and np.any(right_frames[i]):
                _, res = gcc(
                    MonoSignal(left_frames[i], fs),
                    MonoSignal(right_frames[i], fs),
                    kind=params.timing,
                    max_lag_samples=max_lag,
                    zero_pad=options.zero_pad,
                )
                angle_from_itd(res.lag_seconds, model)
                elapsed = time.perf_counter() - t0
                emits.append((starts[i], starts[i] + frame_s + elapsed))
            prev = frame
        for k, onset in enumerate(onsets):
            cap = onsets[k + 1] if k + 1 < len(onsets) else math.inf
            hit = next(
                (emit for fstart, emit in emits if onset <= fstart < cap), None
            )
            if hit is None:
                n_dropped += 1
            else:
                latencies.append(hit - onset)
    return LatencyStats(
        frame_size_s=frame_s, latencies_s=tuple(latencies), n_dropped=n_dropped
    )


# ---------------------------------------------------------------------------
# File formats

_CSV_FIELDS = ("frame_start_s", "accepted", "classifier_value", "lag_s", "angle_rad", "emit_time_s")


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_estimates_csv(estimates: list[DoaEstimate], path: str | Path) -> None:
    """CSV export; the frame size rides along as a leading comment line."""
    path = Path(path)
    if not estimates:
        raise ValueError("no estimates to write")
    frame_s = estimates[0].frame_size_s
    with path.open("w", newline="") as fh:
        fh.write(f"# frame_size_s={_fmt(frame_s)}\n")
        writer = csv.writer(fh)
        writer.writerow(_CSV_FIELDS)
        for e in estimates:
            writer.writerow(
                [
                    _fmt(e.frame_start_s),
                    int(e.accepted),
                    _fmt(e.classifier_value),
                    _fmt(e.lag_seconds) if e.lag_seconds is not None else "",
                    _fmt(e.angle_rad) if e.angle_rad is not None else "",
                    _fmt(e.emit_time_s),
                ]
            )


def read_estimates_csv(path: str | Path) -> list[DoaEstimate]:
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# frame_size_s="):
            raise ValueError(f"{path}: missing frame_size_s header comment")
        frame_s = float(first.split("=", 1)[1])
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            accepted = bool(int(row["accepted"]))
            out.append(
                DoaEstimate(
                    frame_start_s=float(row["frame_start_s"]),
                    frame_size_s=frame_s,
                    accepted=accepted,
                    classifier_value=float(row["classifier_value"]),
                    lag_seconds=float(row["lag_s"]) if row["lag_s"] else None,
                    angle_rad=float(row["angle_rad"]) if row["angle_rad"] else None,
                    prominence=None,
                    emit_time_s=float(row["emit_time_s"]),
                )
            )
    return out


def annotation_dict(truth: GroundTruth) -> dict:
    return {
        "label": truth.label,
        "weight": truth.weight,
        "speech_intervals": [[s, e] for s, e in truth.speech_intervals],
        "angle_track": [[t, a] for t, a in truth.angle_track],
    }


def write_annotation(truth: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(json.dumps(annotation_dict(truth), indent=2) + "\n")


def read_annotation(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text())
    for key in ("label", "weight", "speech_intervals", "angle_track"):
        if key not in data:
            raise ValueError(f"{path}: annotation missing key {key!r}")
    return data


def ground_truth_from_annotation(path: str | Path) -> GroundTruth:
    meta = read_annotation(path)
    return GroundTruth(
        speech_intervals=tuple((s, e) for s, e in meta["speech_intervals"]),
        angle_track=tuple((t, a) for t, a in meta["angle_track"]),
        weight=meta["weight"],
        label=meta["label"],
    )


def load_recording(wav_path: str | Path, annotation_path: str | Path) -> AnnotatedRecording:
    audio = read_wav(wav_path)
    if not isinstance(audio, StereoSignal):
        raise ValueError(f"{wav_path}: expected a 2-channel file")
    truth = ground_truth_from_annotation(annotation_path)
    return AnnotatedRecording(
        audio=audio,
        speech_intervals=truth.speech_intervals,
        angle_track=truth.angle_track,
        weight=truth.weight,
        label=truth.label,
    )


def write_manifest(entries: list[dict], path: str | Path) -> None:
    """entries: [{"wav": ..., "annotation": ..., "dataset": "train"|"test"}, ...]

    Order matters: the optimizer evaluates training recordings in listed
    order for its early-termination rule.
    """
    for e in entries:
        for key in ("wav", "annotation", "dataset"):
            if key not in e:
                raise ValueError(f"manifest entry missing {key!r}: {e}")
    Path(path).write_text(json.dumps({"recordings": entries}, indent=2) + "\n")


def load_manifest(path: str | Path) -> tuple[list[AnnotatedRecording], list[AnnotatedRecording]]:
    """Load (train, test) recordings, resolving paths relative to the manifest."""
    path = Path(path)
    data = json.loads(path.read_text())
    if "recordings" not in data:
        raise ValueError(f"{path}: manifest missing 'recordings'")
    train, test = [], []
    for entry in data["recordings"]:
        wav = path.parent / entry["wav"]
        ann = path.parent / entry["annotation"]
        rec = load_recording(wav, ann)
        (train if entry["dataset"] == "train" else test).append(rec)
    return train, test
