"""Gyro and relative-position measurement models plus finite differences.

Faults are multiplicative (scale factor) or additive (bias) on a single gyro
axis, active from t_activate on; the fault value may be a constant or a
time-profile callable. Noise is zero-mean white Gaussian, i.i.d. per axis
and per sample, reproducible from the seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .constants import DEFAULT_GYRO_SIGMA, DEFAULT_RANGING_SIGMA

AXES = {"x": 0, "y": 1, "z": 2}

ValueOrProfile = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class GyroNoiseSpec:
    sigma: float = DEFAULT_GYRO_SIGMA   # rad/s per axis
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("gyro noise sigma must be non-negative")


@dataclass(frozen=True)
class RangingNoiseSpec:
    sigma: float = DEFAULT_RANGING_SIGMA  # m per axis, in primary body frame
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("ranging noise sigma must be non-negative")


@dataclass(frozen=True)
class FaultSpec:
    axis: str                  # "x" | "y" | "z"
    kind: str                  # "scale" | "bias"
    value: ValueOrProfile      # s (dimensionless) or b (rad/s)
    t_activate: float

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of x/y/z, got {self.axis!r}")
        if self.kind not in ("scale", "bias"):
            raise ValueError(f"kind must be 'scale' or 'bias', got {self.kind!r}")

    @property
    def axis_index(self) -> int:
        return AXES[self.axis]

    def value_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if callable(self.value):
            return np.vectorize(self.value, otypes=[float])(t)
        return np.full(t.shape, float(self.value))


@dataclass(frozen=True)
class MeasurementRecord:
    t: float
    omega_meas: np.ndarray   # rad/s, body frame
    r_sp_meas: np.ndarray    # m, primary body frame


def apply_fault(omega_true, t, fault: Optional[FaultSpec]) -> np.ndarray:
    """Noise-free faulty gyro output for a (n,3) rate series at times t (n,)."""
    w = np.array(omega_true, dtype=float, copy=True)
    if fault is None:
        return w
    t = np.asarray(t, dtype=float)
    active = t >= fault.t_activate
    if not active.any():
        return w
    val = fault.value_at(t[active])
    i = fault.axis_index
    if fault.kind == "scale":
        w[active, i] = val * w[active, i]
    else:
        w[active, i] = w[active, i] + val
    return w


def gyro_measure(omega_true, fault: Optional[FaultSpec], noise: GyroNoiseSpec,
                 t, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Measured body rates: fault applied on its axis from t_activate, then
    additive white noise on all axes.

    Accepts a single (3,) sample with scalar t or an (n,3) series with (n,) t.
    """
    w = np.atleast_2d(np.asarray(omega_true, dtype=float))
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    out = apply_fault(w, tv, fault)
    if noise.sigma > 0:
        gen = rng if rng is not None else np.random.default_rng(noise.seed)
        out = out + gen.normal(0.0, noise.sigma, out.shape)
    return out[0] if np.ndim(omega_true) == 1 else out


def range_measure(r_sp_true, noise: RangingNoiseSpec,
                  rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Measured relative position in the primary body frame (additive noise)."""
    r = np.asarray(r_sp_true, dtype=float)
    if noise.sigma == 0:
        return r.copy()
    gen = rng if rng is not None else np.random.default_rng(noise.seed)
    return r + gen.normal(0.0, noise.sigma, r.shape)


# fourth-order central stencils
FD4_FIRST = np.array([1.0, -8.0, 0.0, 8.0, -1.0])      # /(12 h)
FD4_SECOND = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])  # /(12 h^2)


def _fd4(series, h: float, coeffs, denom: float) -> np.ndarray:
    y = np.asarray(series, dtype=float)
    if y.shape[0] < 5:
        raise ValueError("need at least 5 samples for the 5-point stencil")
    if h <= 0:
        raise ValueError("step must be positive")
    out = np.full_like(y, np.nan)
    acc = coeffs[0] * y[:-4] + coeffs[1] * y[1:-3] + coeffs[2] * y[2:-2] \
        + coeffs[3] * y[3:-1] + coeffs[4] * y[4:]
    out[2:-2] = acc / denom
    return out


def fd4_first_derivative(series, h: float) -> np.ndarray:
    """5-point fourth-order first derivative of a uniformly sampled series.

    The first and last two samples have no centered window and are NaN.
    Exact on polynomials through degree 4.
    """
    return _fd4(series, h, FD4_FIRST, 12.0 * h)


def fd4_second_derivative(series, h: float) -> np.ndarray:
    """5-point fourth-order second derivative; boundary samples are NaN.

    Exact on polynomials through degree 5.
    """
    return _fd4(series, h, FD4_SECOND, 12.0 * h * h)


def fd4_noise_gain_first(h: float) -> float:
    """Std amplification of i.i.d. input noise through the first-derivative stencil."""
    return float(np.sqrt((FD4_FIRST**2).sum()) / (12.0 * h))


def fd4_noise_gain_second(h: float) -> float:
    """Std amplification of i.i.d. input noise through the second-derivative stencil."""
    return float(np.sqrt((FD4_SECOND**2).sum()) / (12.0 * h * h))
