"""Physical constants and unit helpers.

Standard WGS84/EGM96-style Earth values. All internal computation is SI
(meters, seconds, radians); config files speak kilometers and degrees and
are converted at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class EarthConstants:
    mu: float = 3.986004418e14   # m^3/s^2, gravitational parameter
    r_eq: float = 6.378137e6     # m, equatorial radius
    j2: float = 1.08263e-3       # second zonal harmonic


EARTH = EarthConstants()

DEG = math.pi / 180.0
ARCSEC = DEG / 3600.0
DEG_PER_HOUR = DEG / 3600.0    # 1 deg/hr in rad/s

# fiber-optic gyro noise floor used throughout the scenarios
DEFAULT_GYRO_SIGMA = 3.6 * DEG_PER_HOUR        # rad/s
DEFAULT_RANGING_SIGMA = 0.001                  # m per axis at ~1 km range


def rad(deg: float) -> float:
    return deg * DEG


def deg(rad_: float) -> float:
    return rad_ / DEG
