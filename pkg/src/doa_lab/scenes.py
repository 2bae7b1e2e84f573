"""Synthetic binaural scene generation with known ground truth.

Scenes place a speech-like amplitude-modulated noise source on an azimuth
track, binauralize it with a pure interaural-time-difference model, and
optionally add discrete echoes, localized distractor sounds, a robot-noise
surrogate at the head itself (band-limited hum plus periodic servo-like
chirps), and Gaussian sensor noise.  Everything is deterministic in the
scene seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import AZIMUTH_MAX_RAD, HeadModel, itd_woodworth
from .pipeline import AnnotatedRecording, write_annotation, write_manifest
from .signals import DEFAULT_SAMPLE_RATE, MonoSignal, StereoSignal, write_wav

__all__ = [
    "SceneSpec",
    "SceneSuite",
    "TRAIN_WEIGHTS",
    "synth_speech_like",
    "binauralize",
    "render",
    "default_suite",
    "write_suite",
    "suite_to_dict",
    "suite_from_dict",
    "load_suite_json",
]

# Speech-band carrier limits (telephone band) and modulator ranges.  The
# modulation envelope uses two tones, one in the low syllabic range and one
# in the upper range, so the 4-16 Hz modulation bands carry most of the
# envelope energy.  The carrier amplitude rolls off as 1/f above the knee,
# approximating the long-term speech spectrum: most energy sits in the low
# formant region, which is what makes energy-weighted correlation broad.
CARRIER_BAND_HZ = (300.0, 3400.0)
CARRIER_TILT_KNEE_HZ = 500.0
MODULATOR_LOW_HZ = (4.0, 9.0)
MODULATOR_HIGH_HZ = (9.0, 16.0)
DEFAULT_MODULATION_DEPTH = 0.9

BINAURAL_BLOCK_S = 0.05
_BLOCK_CONTEXT = 256  # samples of context absorbing circular wrap per block

# Robot-noise surrogate levels (RMS relative to unit-RMS speech)
HUM_BAND_HZ = (50.0, 500.0)
HUM_RMS = 0.06
WHINE_FREQS_HZ = (740.0, 1480.0)
WHINE_RMS = 0.7
CHIRP_EVERY_S = 2.0
CHIRP_DURATION_S = 0.2
CHIRP_BAND_HZ = (300.0, 900.0)
CHIRP_RMS = 0.12

# Distractors are lab sounds: a band-passed transient clack and a two-tone
# device beep.  Both are narrowband enough not to claim spectrum outside
# the speech band.
CLICK_DURATION_S = 0.002
CLICK_BAND_HZ = (1500.0, 4500.0)
BURST_DURATION_S = 0.05
BEEP_FREQS_HZ = (2200.0, 2700.0)
_FADE_S = 0.005

TRAIN_WEIGHTS = (1, 1, 2, 2, 3, 2, 1, 3)


@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to render one scene deterministically."""

    label: str
    duration_s: float
    sample_rate_hz: float
    talker_track: tuple[tuple[float, float], ...]
    speech_intervals: tuple[tuple[float, float], ...]
    echoes: tuple[tuple[float, float, float], ...] = ()  # (extra_delay_s, gain, azimuth)
    noise_rms: float = 0.0
    distractors: tuple[tuple[float, str, float], ...] = ()  # (time_s, kind, level)
    robot_noise: bool = False
    seed: int = 0
    weight: int = 1

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        track = tuple((float(t), float(a)) for t, a in self.talker_track)
        object.__setattr__(self, "talker_track", track)
        for _, theta in track:
            if abs(theta) > AZIMUTH_MAX_RAD + 1e-12:
                raise ValueError(f"track azimuth {theta} outside [-pi/2, pi/2]")
        intervals = tuple((float(s), float(e)) for s, e in self.speech_intervals)
        object.__setattr__(self, "speech_intervals", intervals)
        for s, e in intervals:
            if not (0.0 <= s < e <= self.duration_s):
                raise ValueError(f"speech interval [{s}, {e}] outside the scene")
        echoes = tuple((float(d), float(g), float(a)) for d, g, a in self.echoes)
        object.__setattr__(self, "echoes", echoes)
        for delay, gain, az in echoes:
            if delay < 0:
                raise ValueError("echo delay must be non-negative")
            if not 0.0 <= gain < 1.0:
                raise ValueError(f"echo gain must be in [0, 1), got {gain}")
            if abs(az) > AZIMUTH_MAX_RAD + 1e-12:
                raise ValueError("echo azimuth outside [-pi/2, pi/2]")
        if self.noise_rms < 0:
            raise ValueError("noise_rms must be >= 0")
        distractors = tuple((float(t), str(k), float(lv)) for t, k, lv in self.distractors)
        object.__setattr__(self, "distractors", distractors)
        for t, kind, level in distractors:
            if kind not in ("click", "burst"):
                raise ValueError(f"unknown distractor kind {kind!r}")
            if not 0.0 <= t <= self.duration_s:
                raise ValueError("distractor time outside the scene")
            if level < 0:
                raise ValueError("distractor level must be >= 0")
        if int(self.weight) < 1:
            raise ValueError("weight must be a positive integer")
        object.__setattr__(self, "weight", int(self.weight))
        object.__setattr__(self, "seed", int(self.seed))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
            "talker_track": [[t, a] for t, a in self.talker_track],
            "speech_intervals": [[s, e] for s, e in self.speech_intervals],
            "echoes": [[d, g, a] for d, g, a in self.echoes],
            "noise_rms": self.noise_rms,
            "distractors": [[t, k, lv] for t, k, lv in self.distractors],
            "robot_noise": self.robot_noise,
            "seed": self.seed,
            "weight": self.weight,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        return cls(
            label=data["label"],
            duration_s=data["duration_s"],
            sample_rate_hz=data["sample_rate_hz"],
            talker_track=tuple((t, a) for t, a in data["talker_track"]),
            speech_intervals=tuple((s, e) for s, e in data["speech_intervals"]),
            echoes=tuple((d, g, a) for d, g, a in data.get("echoes", [])),
            noise_rms=data.get("noise_rms", 0.0),
            distractors=tuple((t, k, lv) for t, k, lv in data.get("distractors", [])),
            robot_noise=data.get("robot_noise", False),
            seed=data.get("seed", 0),
            weight=data.get("weight", 1),
        )


@dataclass(frozen=True)
class SceneSuite:
    """Eight weighted training scenes plus three test scenes."""

    train: tuple[SceneSpec, ...]
    test: tuple[SceneSpec, ...]

    def __post_init__(self):
        if len(self.train) != 8:
            raise ValueError("suite needs exactly 8 training scenes")
        weights = tuple(s.weight for s in self.train)
        if weights != TRAIN_WEIGHTS:
            raise ValueError(f"training weights must be {TRAIN_WEIGHTS}, got {weights}")
        if len(self.test) != 3:
            raise ValueError("suite needs exactly 3 test scenes")


def _bandlimited_noise(n: int, sample_rate: float, band: tuple[float, float], rng) -> np.ndarray:
    """White noise restricted to a frequency band via a spectral mask."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spectrum[(freqs < band[0]) | (freqs > band[1])] = 0.0
    return np.fft.irfft(spectrum, n=n)


def _speech_carrier(n: int, sample_rate: float, rng) -> np.ndarray:
    """Band-limited noise with a 1/f amplitude rolloff above the tilt knee."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spectrum[(freqs < CARRIER_BAND_HZ[0]) | (freqs > CARRIER_BAND_HZ[1])] = 0.0
    above = freqs > CARRIER_TILT_KNEE_HZ
    spectrum[above] *= CARRIER_TILT_KNEE_HZ / freqs[above]
    return np.fft.irfft(spectrum, n=n)


def _normalize_rms(x: np.ndarray, target: float = 1.0) -> np.ndarray:
    rms = float(np.sqrt(np.mean(x**2)))
    if rms == 0.0:
        return x
    return x * (target / rms)


def synth_speech_like(
    duration_s: float,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    seed: int = 0,
    modulation_depth: float = DEFAULT_MODULATION_DEPTH,
) -> MonoSignal:
    """Speech-band noise with syllable-rate amplitude modulation, RMS 1.

    The envelope is 1 + depth*(0.7*sin(2*pi*f1*t + p1) + 0.3*sin(2*pi*f2*t
    + p2)) with f1 in the low and f2 in the high syllabic range, keeping
    the envelope positive and its spectrum inside the 4-16 Hz band.
    """
    if duration_s < 0.5:
        raise ValueError("need at least 0.5 s to carry syllable-rate modulation")
    if not 0.0 <= modulation_depth <= 1.0:
        raise ValueError("modulation_depth must be within [0, 1]")
    n = int(round(duration_s * sample_rate))
    rng = np.random.default_rng(seed)
    carrier = _speech_carrier(n, sample_rate, rng)
    f_low = rng.uniform(*MODULATOR_LOW_HZ)
    f_high = rng.uniform(*MODULATOR_HIGH_HZ)
    p_low, p_high = rng.uniform(0.0, 2.0 * math.pi, size=2)
    t = np.arange(n) / sample_rate
    envelope = 1.0 + modulation_depth * (
        0.7 * np.sin(2.0 * math.pi * f_low * t + p_low)
        + 0.3 * np.sin(2.0 * math.pi * f_high * t + p_high)
    )
    return MonoSignal(_normalize_rms(carrier * envelope), sample_rate)


def _fractional_delay(x: np.ndarray, delay_samples: float) -> np.ndarray:
    """Shift a whole signal by a possibly fractional number of samples.

    Positive delay moves content later.  Zero padding on both sides keeps
    the circular wrap of the spectral shift out of the result.
    """
    if delay_samples == 0.0:
        return x.copy()
    n = len(x)
    pad = int(math.ceil(abs(delay_samples))) + 32
    padded = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    freqs = np.fft.rfftfreq(len(padded))
    spectrum = np.fft.rfft(padded) * np.exp(-2j * math.pi * freqs * delay_samples)
    shifted = np.fft.irfft(spectrum, n=len(padded))
    return shifted[pad : pad + n]


def _delay_block(x: np.ndarray, start: int, stop: int, delay_samples: float) -> np.ndarray:
    """Delay one block, reading context around it to absorb edge effects."""
    n = len(x)
    lo = start - _BLOCK_CONTEXT
    hi = stop + _BLOCK_CONTEXT
    segment = np.zeros(hi - lo)
    src_lo, src_hi = max(lo, 0), min(hi, n)
    segment[src_lo - lo : src_hi - lo] = x[src_lo:src_hi]
    freqs = np.fft.rfftfreq(len(segment))
    spectrum = np.fft.rfft(segment) * np.exp(-2j * math.pi * freqs * delay_samples)
    shifted = np.fft.irfft(spectrum, n=len(segment))
    return shifted[start - lo : stop - lo]


def _track_angles(track: tuple[tuple[float, float], ...], times: np.ndarray) -> np.ndarray:
    knots_t = np.array([t for t, _ in track])
    knots_a = np.array([a for _, a in track])
    return np.interp(times, knots_t, knots_a)


def binauralize(
    source: MonoSignal,
    track: tuple[tuple[float, float], ...],
    model: HeadModel | None = None,
) -> StereoSignal:
    """Render a mono source to two channels with an ITD-only head model.

    A static source gets one whole-signal fractional delay of -tau/2 on
    the left and +tau/2 on the right, tau taken from the spherical-head
    map.  A moving source is rendered in 50 ms half-overlapping blocks
    crossfaded with a periodic Hann window (unity-gain overlap-add), the
    delay of each block taken at its center; the crossfade keeps the two
    channels free of shared block-edge glitches that a correlator would
    mistake for a zero-delay source.  No level difference is applied: the
    downstream estimator uses timing cues only.
    """
    if model is None:
        model = HeadModel()
    if not track:
        raise ValueError("track needs at least one knot")
    for t, _ in track:
        if t < 0 or t > source.duration_s + 1e-9:
            raise ValueError(f"track time {t} outside the signal duration")
    n = len(source)
    fs = source.sample_rate
    x = source.samples
    angles_const = len({a for _, a in track}) == 1
    if angles_const:
        tau = itd_woodworth(track[0][1], model)
        half = 0.5 * tau * fs
        left = _fractional_delay(x, -half)
        right = _fractional_delay(x, +half)
        return StereoSignal(MonoSignal(left, fs), MonoSignal(right, fs))
    hop = max(1, int(round(0.5 * BINAURAL_BLOCK_S * fs)))
    block = 2 * hop
    # periodic Hann: w[k] + w[k + hop] == 1, so two overlapping blocks
    # reconstruct every sample exactly
    window = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(block) / block))
    left = np.zeros(n)
    right = np.zeros(n)
    for start in range(-hop, n, hop):
        stop = start + block
        center_t = min(max((start + stop) / 2.0, 0.0), float(n)) / fs
        theta = float(_track_angles(track, np.array([center_t]))[0])
        tau = itd_woodworth(theta, model)
        half = 0.5 * tau * fs
        lo, hi = max(start, 0), min(stop, n)
        sl = slice(lo - start, hi - start)
        left[lo:hi] += _delay_block(x, start, stop, -half)[sl] * window[sl]
        right[lo:hi] += _delay_block(x, start, stop, +half)[sl] * window[sl]
    return StereoSignal(MonoSignal(left, fs), MonoSignal(right, fs))


def _edge_fade(x: np.ndarray, sample_rate: float, fade_s: float = _FADE_S) -> np.ndarray:
    m = min(int(round(fade_s * sample_rate)), len(x) // 2)
    if m < 1:
        return x
    ramp = 0.5 * (1.0 - np.cos(np.linspace(0.0, math.pi, m)))
    out = x.copy()
    out[:m] *= ramp
    out[-m:] *= ramp[::-1]
    return out


def _click_sound(n: int, sample_rate: float, rms: float, rng) -> np.ndarray:
    """Short band-passed transient: a keyboard- or relay-style clack."""
    burst = _bandlimited_noise(n, sample_rate, CLICK_BAND_HZ, rng) * np.hanning(n)
    return _normalize_rms(burst, rms)


def _beep_sound(n: int, sample_rate: float, rms: float, rng) -> np.ndarray:
    """Two-tone device beep under a Hann envelope."""
    t = np.arange(n) / sample_rate
    tone = np.zeros(n)
    for freq in BEEP_FREQS_HZ:
        tone += np.sin(2.0 * math.pi * freq * t + rng.uniform(0.0, 2.0 * math.pi))
    return _normalize_rms(tone * np.hanning(n), rms)


def _robot_noise(n: int, sample_rate: float, rng) -> np.ndarray:
    """Stationary hum, a strong narrowband servo whine, and periodic chirps."""
    hum = _normalize_rms(_bandlimited_noise(n, sample_rate, HUM_BAND_HZ, rng), HUM_RMS)
    out = hum
    t_all = np.arange(n) / sample_rate
    whine = np.zeros(n)
    for freq in WHINE_FREQS_HZ:
        whine += np.sin(2.0 * math.pi * freq * t_all + rng.uniform(0.0, 2.0 * math.pi))
    out += _normalize_rms(whine, WHINE_RMS)
    chirp_len = int(round(CHIRP_DURATION_S * sample_rate))
    period = int(round(CHIRP_EVERY_S * sample_rate))
    f0, f1 = CHIRP_BAND_HZ
    t = np.arange(chirp_len) / sample_rate
    phase = 2.0 * math.pi * (f0 * t + 0.5 * (f1 - f0) / CHIRP_DURATION_S * t**2)
    for start in range(period // 2, n - chirp_len, period):
        offset = rng.uniform(0.0, 2.0 * math.pi)
        chirp = np.sin(phase + offset) * np.hanning(chirp_len)
        out[start : start + chirp_len] += _normalize_rms(chirp, CHIRP_RMS)
    return out


def render(spec: SceneSpec, model: HeadModel | None = None) -> AnnotatedRecording:
    """Deterministically render a scene to an annotated stereo recording."""
    if model is None:
        model = HeadModel()
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    seed_seq = np.random.SeedSequence(spec.seed)
    seeds = seed_seq.generate_state(len(spec.speech_intervals) + 3)
    rng_noise = np.random.default_rng(seeds[-3])
    rng_distract = np.random.default_rng(seeds[-2])
    rng_robot = np.random.default_rng(seeds[-1])

    dry = np.zeros(n)
    for k, (s, e) in enumerate(spec.speech_intervals):
        i0, i1 = int(round(s * fs)), int(round(e * fs))
        piece = synth_speech_like(e - s, fs, seed=int(seeds[k]))
        samples = _edge_fade(piece.samples, fs)
        dry[i0 : i0 + len(samples)] = samples[: max(0, n - i0)]

    audio = binauralize(MonoSignal(dry, fs), spec.talker_track, model)
    left = audio.left.samples.copy()
    right = audio.right.samples.copy()
    for extra_delay_s, gain, echo_az in spec.echoes:
        delayed = _fractional_delay(dry, extra_delay_s * fs)
        echo = binauralize(MonoSignal(delayed, fs), ((0.0, echo_az),), model)
        left += gain * echo.left.samples
        right += gain * echo.right.samples

    for t0, kind, level in spec.distractors:
        dur = CLICK_DURATION_S if kind == "click" else BURST_DURATION_S
        i0 = int(round(t0 * fs))
        m = min(int(round(dur * fs)), n - i0)
        azimuth = rng_distract.uniform(-AZIMUTH_MAX_RAD, AZIMUTH_MAX_RAD)
        if m > 0:
            buf = np.zeros(n)
            if kind == "click":
                buf[i0 : i0 + m] = _click_sound(m, fs, level, rng_distract)
            else:
                buf[i0 : i0 + m] = _beep_sound(m, fs, level, rng_distract)
            placed = binauralize(MonoSignal(buf, fs), ((0.0, azimuth),), model)
            left += placed.left.samples
            right += placed.right.samples
    if spec.robot_noise:
        # ego-noise sits at the head itself, so it lands on both channels
        hum = _robot_noise(n, fs, rng_robot)
        left += hum
        right += hum

    if spec.noise_rms > 0:
        left += rng_noise.normal(0.0, spec.noise_rms, n)
        right += rng_noise.normal(0.0, spec.noise_rms, n)

    return AnnotatedRecording(
        audio=StereoSignal(MonoSignal(left, fs), MonoSignal(right, fs)),
        speech_intervals=spec.speech_intervals,
        angle_track=spec.talker_track,
        weight=spec.weight,
        label=spec.label,
    )


def _rad(deg: float) -> float:
    return math.radians(deg)


def default_suite(seed: int = 0, duration_s: float = 8.0) -> SceneSuite:
    """Eight training scenes and three test scenes covering the scenario mix:

    static or moving talker, with or without non-speech distractor sounds
    (sequential or simultaneous with speech), and with or without robot
    noise.  Moving talkers sweep linearly between -60 and +60 degrees.
    """
    fs = DEFAULT_SAMPLE_RATE
    d = duration_s
    intervals = (
        (0.10 * d, 0.30 * d),
        (0.425 * d, 0.625 * d),
        (0.75 * d, 0.95 * d),
    )
    gaps_mid = (0.36 * d, 0.69 * d)  # centers of the two interior silences
    sweep_up = ((0.0, _rad(-60.0)), (d, _rad(60.0)))
    sweep_down = ((0.0, _rad(60.0)), (d, _rad(-60.0)))

    def static(theta_deg: float):
        return ((0.0, _rad(theta_deg)),)

    def seq_distractors(level: float = 0.6):
        # in the speech gaps: non-speech sounds alternating with speech
        return ((gaps_mid[0], "burst", level), (gaps_mid[1], "click", level))

    def sim_distractors(level: float = 0.6):
        # inside the speech intervals: simultaneous with speech
        mid = [0.5 * (s + e) for s, e in intervals]
        return ((mid[0], "burst", level), (mid[1], "click", level), (mid[2], "burst", level))

    # image-source style early reflections: detours of a few to tens of ms,
    # gains decaying with path length, arrival directions spread around the
    # room; the summed reflected energy is comparable to the direct path
    echo = (
        (0.0023, 0.30, _rad(-35.0)),
        (0.0047, 0.26, _rad(48.0)),
        (0.0071, 0.23, _rad(-62.0)),
        (0.0098, 0.20, _rad(20.0)),
        (0.0131, 0.17, _rad(-10.0)),
        (0.0167, 0.14, _rad(65.0)),
        (0.0209, 0.12, _rad(-50.0)),
        (0.0256, 0.10, _rad(35.0)),
        (0.0311, 0.08, _rad(-20.0)),
        (0.0377, 0.07, _rad(8.0)),
    )
    base = dict(duration_s=d, sample_rate_hz=fs, speech_intervals=intervals, noise_rms=0.02)
    k = int(seed) * 1000

    train = (
        SceneSpec(label="train-1-static-speech", talker_track=static(30.0),
                  echoes=echo, seed=k + 1, weight=1, **base),
        SceneSpec(label="train-2-mobile-speech", talker_track=sweep_up,
                  echoes=echo, seed=k + 2, weight=1, **base),
        SceneSpec(label="train-3-static-speech-then-sounds", talker_track=static(-40.0),
                  echoes=echo, distractors=seq_distractors(), seed=k + 3, weight=2, **base),
        SceneSpec(label="train-4-static-speech-with-sounds", talker_track=static(45.0),
                  echoes=echo, distractors=sim_distractors(), seed=k + 4, weight=2, **base),
        SceneSpec(label="train-5-static-speech-with-robot", talker_track=static(-20.0),
                  echoes=echo, robot_noise=True, seed=k + 5, weight=3, **base),
        SceneSpec(label="train-6-mobile-speech-then-sounds", talker_track=sweep_down,
                  echoes=echo, distractors=seq_distractors(), seed=k + 6, weight=2, **base),
        SceneSpec(label="train-7-mobile-speech", talker_track=sweep_down,
                  echoes=echo, seed=k + 7, weight=1, **base),
        SceneSpec(label="train-8-static-speech-then-sounds", talker_track=static(10.0),
                  echoes=echo, distractors=seq_distractors(0.8), seed=k + 8, weight=3, **base),
    )
    test = (
        SceneSpec(label="test-9-mobile-speech-with-robot", talker_track=sweep_up,
                  echoes=echo, robot_noise=True, seed=k + 9, weight=1, **base),
        SceneSpec(label="test-10-static-speech-with-robot", talker_track=static(-30.0),
                  echoes=echo, robot_noise=True, seed=k + 10, weight=1, **base),
        SceneSpec(label="test-11-mobile-speech", talker_track=sweep_up,
                  echoes=echo, seed=k + 11, weight=1, **base),
    )
    return SceneSuite(train=train, test=test)


def suite_to_dict(suite: SceneSuite) -> dict:
    return {
        "train": [s.to_dict() for s in suite.train],
        "test": [s.to_dict() for s in suite.test],
    }


def suite_from_dict(data: dict) -> SceneSuite:
    return SceneSuite(
        train=tuple(SceneSpec.from_dict(d) for d in data["train"]),
        test=tuple(SceneSpec.from_dict(d) for d in data["test"]),
    )


def load_suite_json(path: str | Path) -> SceneSuite:
    data = json.loads(Path(path).read_text())
    return suite_from_dict(data)


def write_suite(
    suite: SceneSuite,
    out_dir: str | Path,
    model: HeadModel | None = None,
) -> Path:
    """Render and write every scene as WAV + annotation JSON + one manifest.

    Returns the manifest path.  Training recordings are listed first, in
    suite order, because the optimizer's early-termination rule walks them
    in order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for dataset, specs in (("train", suite.train), ("test", suite.test)):
        for spec in specs:
            rec = render(spec, model)
            wav = f"{spec.label}.wav"
            ann = f"{spec.label}.json"
            write_wav(out_dir / wav, rec.audio)
            write_annotation(rec, out_dir / ann)
            entries.append({"wav": wav, "annotation": ann, "dataset": dataset})
    manifest = out_dir / "manifest.json"
    write_manifest(entries, manifest)
    return manifest
