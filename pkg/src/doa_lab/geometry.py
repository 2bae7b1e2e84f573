"""Interaural time difference <-> azimuth mapping on a spherical head.

Azimuth is measured in radians on the frontal half-plane [-pi/2, +pi/2],
0 straight ahead.  Positive azimuth lies on the side of the leading LEFT
microphone, matching the lag sign convention in :mod:`doa_lab.timing`:
a source at positive azimuth arrives at the left ear first and produces a
positive delay of the right channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnidentifiableError

__all__ = [
    "HeadModel",
    "AZIMUTH_MAX_RAD",
    "itd_simple",
    "itd_woodworth",
    "angle_from_itd",
    "calibrate_distance",
    "max_feasible_itd",
]

AZIMUTH_MAX_RAD = math.pi / 2

SPEED_OF_SOUND_MPS = 343.0  # air at ~20 C; the default, not a measured value

_ANGLE_TOL_RAD = 1e-10


@dataclass(frozen=True)
class HeadModel:
    """Microphone separation and propagation speed."""

    ear_distance_m: float = 0.255
    speed_of_sound_mps: float = SPEED_OF_SOUND_MPS

    def __post_init__(self):
        if not 0.05 <= self.ear_distance_m <= 0.5:
            raise ValueError(
                f"ear_distance_m outside sanity range [0.05, 0.5]: {self.ear_distance_m}"
            )
        if not self.speed_of_sound_mps > 0:
            raise ValueError("speed_of_sound_mps must be positive")


def _check_azimuth(theta_rad: float) -> float:
    theta_rad = float(theta_rad)
    if not math.isfinite(theta_rad):
        raise ValueError("azimuth must be finite")
    if abs(theta_rad) > AZIMUTH_MAX_RAD + 1e-12:
        raise ValueError(f"azimuth {theta_rad} rad outside frontal range [-pi/2, pi/2]")
    return theta_rad


def itd_simple(theta_rad: float, model: HeadModel) -> float:
    """Free-field two-point delay: D*sin(theta)/v."""
    theta_rad = _check_azimuth(theta_rad)
    return model.ear_distance_m * math.sin(theta_rad) / model.speed_of_sound_mps


def itd_woodworth(theta_rad: float, model: HeadModel) -> float:
    """Spherical-head delay D/(2v) * (theta + sin(theta)).

    Strictly increasing on the frontal range; accounts for the wavefront
    wrapping around the head to the far microphone.
    """
    theta_rad = _check_azimuth(theta_rad)
    return (
        model.ear_distance_m
        / (2.0 * model.speed_of_sound_mps)
        * (theta_rad + math.sin(theta_rad))
    )


def max_feasible_itd(model: HeadModel) -> float:
    """Largest delay the spherical-head map can produce (at +pi/2)."""
    return itd_woodworth(AZIMUTH_MAX_RAD, model)


def angle_from_itd(tau_s: float, model: HeadModel) -> tuple[float, bool]:
    """Invert the spherical-head map by bisection.

    Returns (azimuth_rad, clipped).  Delays beyond the feasible bound
    clamp to +-pi/2 with clipped=True; quantized integer-lag delays can
    legitimately exceed the bound by a fraction of a sample.
    """
    tau_s = float(tau_s)
    if not math.isfinite(tau_s):
        raise ValueError("tau must be finite")
    tau_max = max_feasible_itd(model)
    if tau_s >= tau_max:
        return AZIMUTH_MAX_RAD, tau_s > tau_max
    if tau_s <= -tau_max:
        return -AZIMUTH_MAX_RAD, tau_s < -tau_max
    lo, hi = -AZIMUTH_MAX_RAD, AZIMUTH_MAX_RAD
    # itd_woodworth is strictly monotone, so plain bisection converges
    while hi - lo > _ANGLE_TOL_RAD:
        mid = 0.5 * (lo + hi)
        if itd_woodworth(mid, model) < tau_s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


def calibrate_distance(observations, speed_of_sound_mps: float = SPEED_OF_SOUND_MPS) -> float:
    """Least-squares ear distance from (known azimuth, measured delay) pairs.

    The spherical-head map is linear in D, so the fit is closed-form:
    D = sum(tau_k * a_k) / sum(a_k^2) with a_k = (theta_k + sin theta_k)/(2v).

    Raises UnidentifiableError when every observation is at zero azimuth.
    """
    observations = list(observations)
    if not observations:
        raise ValueError("need at least one observation")
    if not speed_of_sound_mps > 0:
        raise ValueError("speed_of_sound_mps must be positive")
    num = 0.0
    den = 0.0
    for theta_rad, tau_s in observations:
        theta_rad = _check_azimuth(theta_rad)
        a = (theta_rad + math.sin(theta_rad)) / (2.0 * speed_of_sound_mps)
        num += tau_s * a
        den += a * a
    if den == 0.0:
        raise UnidentifiableError("all observations at zero azimuth; distance unidentifiable")
    return num / den
