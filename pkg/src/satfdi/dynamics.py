"""Orbit and rigid-body attitude propagation.

Absolute orbits integrate two-body gravity with optional J2 and exponential
drag; the primary's attitude follows torque-free Euler dynamics with unit
quaternion kinematics. Both use the fixed-step RK4 kernels.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constants import EARTH
from .orbits import InertialState


class ReentryError(RuntimeError):
    """Propagated altitude dropped below the Earth radius."""


@dataclass(frozen=True)
class AttitudeState:
    """Unit quaternion (ECI -> body, scalar first) and body angular rate (rad/s)."""

    q: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        w = np.asarray(self.omega, dtype=float)
        if q.shape != (4,) or w.shape != (3,):
            raise ValueError("attitude state must be (4,) quaternion and (3,) rate")
        n = float(np.linalg.norm(q))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {n} deviates from 1 beyond 1e-9")
        object.__setattr__(self, "q", q / n)
        object.__setattr__(self, "omega", w)


@dataclass(frozen=True)
class InertiaTensor:
    """Principal moments of inertia (kg*m^2)."""

    ixx: float
    iyy: float
    izz: float

    def __post_init__(self):
        m = (self.ixx, self.iyy, self.izz)
        if min(m) <= 0:
            raise ValueError("moments of inertia must be positive")
        if (self.ixx + self.iyy < self.izz or self.iyy + self.izz < self.ixx
                or self.izz + self.ixx < self.iyy):
            raise ValueError("inertia triangle inequality violated")

    @property
    def diag(self) -> np.ndarray:
        return np.array([self.ixx, self.iyy, self.izz])


@dataclass(frozen=True)
class DragParams:
    cd: float = 2.5
    area: float = 1.0          # m^2
    mass: float = 4.1          # kg
    rho0: float = 1.225        # kg/m^3 at the reference altitude
    h0: float = 0.0            # m, reference altitude above r_eq
    scale_height: float = 8500.0  # m

    def __post_init__(self):
        if self.scale_height <= 0 or self.rho0 < 0:
            raise ValueError("invalid atmosphere parameters")
        if min(self.cd, self.area, self.mass) <= 0:
            raise ValueError("drag parameters must be positive")

    @property
    def bcoef(self) -> float:
        return self.cd * self.area / self.mass


@dataclass(frozen=True)
class ForceModel:
    """Two-body gravity is always on; J2 and drag are optional."""

    j2: bool = False
    drag: bool = False
    drag_params: DragParams = field(default_factory=DragParams)
    mu: float = EARTH.mu
    r_eq: float = EARTH.r_eq
    j2_coef: float = EARTH.j2

    def kernel_params(self) -> np.ndarray:
        d = self.drag_params
        return kernels.pack_force_params(
            self.mu, self.r_eq, self.j2_coef, j2_on=self.j2, drag_on=self.drag,
            bcoef=d.bcoef if self.drag else 0.0, rho0=d.rho0, h0=d.h0,
            scale_height=d.scale_height)


@dataclass(frozen=True)
class SimulationGrid:
    t0: float
    t_end: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        span = self.t_end - self.t0
        n = span / self.dt
        if span <= 0 or abs(n - round(n)) > 1e-9:
            raise ValueError("(t_end - t0) must be a positive integer multiple of dt")

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t0) / self.dt))

    def times(self, every: int = 1) -> np.ndarray:
        return self.t0 + self.dt * every * np.arange(self.n_steps // every + 1)


def two_body_accel(r, mu: float = EARTH.mu) -> np.ndarray:
    """Point-mass gravity -mu*r/|r|^3. Vectorized over (..., 3)."""
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r, axis=-1, keepdims=True)
    return -mu * r / rn**3


def j2_accel(r, mu: float = EARTH.mu, r_eq: float = EARTH.r_eq,
             j2: float = EARTH.j2) -> np.ndarray:
    """Oblateness perturbation acceleration in ECI. Vectorized over (..., 3)."""
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r, axis=-1, keepdims=True)
    z2 = (r[..., 2:3] / rn) ** 2
    c = -1.5 * mu * j2 * r_eq**2 / rn**5
    scale = np.concatenate([1.0 - 5.0 * z2, 1.0 - 5.0 * z2, 3.0 - 5.0 * z2], axis=-1)
    return c * scale * r


def drag_accel(st: InertialState, params: DragParams,
               r_eq: float = EARTH.r_eq) -> np.ndarray:
    """Exponential-atmosphere drag acceleration, opposite the velocity."""
    h = float(np.linalg.norm(st.r)) - r_eq
    rho = params.rho0 * np.exp(-(h - params.h0) / params.scale_height)
    vn = float(np.linalg.norm(st.v))
    if vn == 0.0:
        return np.zeros(3)
    q_dyn = 0.5 * rho * vn**2
    return -(q_dyn * params.bcoef) * st.v / vn


def propagate_orbit(st: InertialState, fm: ForceModel, grid: SimulationGrid,
                    every: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Propagate one orbit; returns (t, r, v) sampled every `every` steps.

    Raises ReentryError if the radius falls below the Earth equatorial radius
    at any output sample.
    """
    y0 = np.concatenate([st.r, st.v])
    out = kernels.run_orbit(y0, fm.kernel_params(), grid.n_steps, grid.dt, every)
    r, v = out[:, 0:3], out[:, 3:6]
    rn = np.linalg.norm(r, axis=1)
    if np.any(rn < fm.r_eq) or not np.all(np.isfinite(rn)):
        k = int(np.argmax((rn < fm.r_eq) | ~np.isfinite(rn)))
        raise ReentryError(f"radius fell below Earth radius near t={grid.times(every)[k]:.2f} s")
    return grid.times(every), r, v


def propagate_attitude(att: AttitudeState, inertia: InertiaTensor,
                       grid: SimulationGrid, every: int = 1
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Torque-free rigid-body propagation; returns (t, q, omega)."""
    y0 = np.concatenate([att.q, att.omega])
    out = kernels.run_attitude(y0, inertia.diag, grid.n_steps, grid.dt, every)
    return grid.times(every), out[:, 0:4], out[:, 4:7]


def rotational_energy(omega, inertia: InertiaTensor) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    return 0.5 * (w**2 * inertia.diag).sum(axis=-1)


def angular_momentum(omega, inertia: InertiaTensor) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    return w * inertia.diag
