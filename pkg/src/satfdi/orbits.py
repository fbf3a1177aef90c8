"""Orbital element conversions and local orbit frames.

Elliptic two-body conversions between classical elements and Cartesian
inertial states, plus the orbit-local RSW frame (x along position, z along
orbital angular momentum, y completing the triad).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import EARTH

# Degeneracy conventions: below these, the corresponding node/perigee angle
# is reported as zero so near-circular / near-equatorial round trips are
# deterministic.
_ECC_TOL = 1e-11
_INC_TOL = 1e-11
_MOMENTUM_TOL = 1e-6  # m^2/s, rectilinear-orbit guard


class DegenerateOrbitError(ValueError):
    """Raised when a state has no well-defined element decomposition."""


@dataclass(frozen=True)
class OrbitalElements:
    """Classical elliptic elements, angles in radians, lengths in meters."""

    a: float
    e: float
    i: float
    argp: float
    raan: float
    ta: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        if not 0 <= self.e < 1:
            raise ValueError(f"eccentricity must lie in [0, 1), got {self.e}")
        if not 0 <= self.i <= math.pi:
            raise ValueError(f"inclination must lie in [0, pi], got {self.i}")


@dataclass(frozen=True)
class InertialState:
    """ECI position (m) and velocity (m/s)."""

    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if self.r.shape != (3,) or self.v.shape != (3,):
            raise ValueError("state vectors must be 3-vectors")


@dataclass(frozen=True)
class FrameRotation:
    """Direction-cosine matrix mapping `src` components to `dst` components."""

    matrix: np.ndarray
    src: str
    dst: str

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))
        m = self.matrix
        if m.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if not np.allclose(m.T @ m, np.eye(3), atol=1e-12):
            raise ValueError("rotation is not orthonormal")
        if not abs(np.linalg.det(m) - 1.0) < 1e-12:
            raise ValueError("rotation must be proper (det=+1)")

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec, dtype=float) @ self.matrix.T


def perifocal_rotation(el: OrbitalElements) -> np.ndarray:
    """Rotation taking perifocal components to ECI components."""
    cO, sO = math.cos(el.raan), math.sin(el.raan)
    co, so = math.cos(el.argp), math.sin(el.argp)
    ci, si = math.cos(el.i), math.sin(el.i)
    return np.array([
        [cO * co - sO * so * ci, -cO * so - sO * co * ci, sO * si],
        [sO * co + cO * so * ci, -sO * so + cO * co * ci, -cO * si],
        [so * si, co * si, ci],
    ])


def elements_to_state(el: OrbitalElements, mu: float = EARTH.mu) -> InertialState:
    """Keplerian elements -> Cartesian inertial state (elliptic only)."""
    if el.e >= 1.0:
        raise ValueError("only elliptic orbits are supported (e < 1)")
    p = el.a * (1.0 - el.e**2)
    rmag = p / (1.0 + el.e * math.cos(el.ta))
    r_pf = np.array([rmag * math.cos(el.ta), rmag * math.sin(el.ta), 0.0])
    vf = math.sqrt(mu / p)
    v_pf = np.array([-vf * math.sin(el.ta), vf * (el.e + math.cos(el.ta)), 0.0])
    rot = perifocal_rotation(el)
    return InertialState(rot @ r_pf, rot @ v_pf)


def state_to_elements(st: InertialState, mu: float = EARTH.mu) -> OrbitalElements:
    """Cartesian inertial state -> Keplerian elements (inverse of elements_to_state)."""
    r, v = st.r, st.v
    rmag = float(np.linalg.norm(r))
    if rmag <= 0:
        raise DegenerateOrbitError("zero position vector")
    h = np.cross(r, v)
    hmag = float(np.linalg.norm(h))
    if hmag < _MOMENTUM_TOL:
        raise DegenerateOrbitError("rectilinear orbit: angular momentum ~ 0")

    v2 = float(v @ v)
    energy = 0.5 * v2 - mu / rmag
    if energy >= 0:
        raise ValueError("state is not elliptic (non-negative energy)")
    a = -mu / (2.0 * energy)

    e_vec = (np.cross(v, h) / mu) - r / rmag
    e = float(np.linalg.norm(e_vec))

    i = math.acos(max(-1.0, min(1.0, h[2] / hmag)))
    n_vec = np.cross([0.0, 0.0, 1.0], h)
    nmag = float(np.linalg.norm(n_vec))

    circular = e < _ECC_TOL
    equatorial = i < _INC_TOL or nmag == 0.0

    if equatorial:
        raan = 0.0
    else:
        raan = math.atan2(n_vec[1], n_vec[0]) % (2 * math.pi)

    if circular:
        argp = 0.0
    elif equatorial:
        # longitude of perigee measured from x-axis
        argp = math.atan2(e_vec[1], e_vec[0]) % (2 * math.pi)
    else:
        cos_argp = (n_vec @ e_vec) / (nmag * e)
        argp = math.acos(max(-1.0, min(1.0, cos_argp)))
        if e_vec[2] < 0:
            argp = 2 * math.pi - argp

    if circular:
        # true anomaly measured from the node line (or x-axis when equatorial)
        ref = n_vec / nmag if not equatorial else np.array([1.0, 0.0, 0.0])
        cos_ta = (ref @ r) / rmag
        ta = math.acos(max(-1.0, min(1.0, cos_ta)))
        if (np.cross(ref, r) @ h) < 0:
            ta = 2 * math.pi - ta
    else:
        cos_ta = (e_vec @ r) / (e * rmag)
        ta = math.acos(max(-1.0, min(1.0, cos_ta)))
        if (r @ v) < 0:
            ta = 2 * math.pi - ta

    return OrbitalElements(a=a, e=e, i=i, argp=argp, raan=raan, ta=ta)


def rsw_frame(st: InertialState) -> FrameRotation:
    """ECI -> RSW rotation for a state: rows are r-hat, transverse, h-hat."""
    rmag = float(np.linalg.norm(st.r))
    if rmag <= 0:
        raise DegenerateOrbitError("zero position vector")
    h = np.cross(st.r, st.v)
    hmag = float(np.linalg.norm(h))
    if hmag <= 0:
        raise DegenerateOrbitError("r parallel to v: RSW frame undefined")
    x = st.r / rmag
    z = h / hmag
    y = np.cross(z, x)
    return FrameRotation(np.vstack([x, y, z]), src="ECI", dst="RSW")


def specific_energy(st: InertialState, mu: float = EARTH.mu) -> float:
    return 0.5 * float(st.v @ st.v) - mu / float(np.linalg.norm(st.r))
