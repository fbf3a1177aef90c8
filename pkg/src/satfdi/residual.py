"""The quadratic constant-of-motion residual and its statistics.

The scalar

    Psi = A wx^2 + B wy^2 + C wz^2 + 2D wx wy + 2E wy wz + 2F wz wx
          + 2G wx + 2H wy + 2J wz + K

vanishes identically along the true relative motion. Built from measured
relative position/velocity/acceleration (body frame), the primary's own
orbit position, and measured gyro rates, it serves as the fault residual.
All functions accept a single sample or vectorized (n, ...) series.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .constants import EARTH


@dataclass(frozen=True)
class PsiCoefficients:
    """The ten residual parameters; fields are scalars or (n,) arrays."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    J: np.ndarray
    K: np.ndarray

    @property
    def quad(self) -> np.ndarray:
        """Symmetric 3x3 quadratic-form matrix, shape (..., 3, 3)."""
        A, B, C, D, E, F = (np.asarray(x, dtype=float) for x in
                            (self.A, self.B, self.C, self.D, self.E, self.F))
        row0 = np.stack([A, D, F], axis=-1)
        row1 = np.stack([D, B, E], axis=-1)
        row2 = np.stack([F, E, C], axis=-1)
        return np.stack([row0, row1, row2], axis=-2)

    @property
    def beta(self) -> np.ndarray:
        """Linear-term vector, shape (..., 3)."""
        return np.stack([np.asarray(self.G, dtype=float),
                         np.asarray(self.H, dtype=float),
                         np.asarray(self.J, dtype=float)], axis=-1)

    @property
    def r_sp_sq(self) -> np.ndarray:
        """Squared relative distance recovered from the trace identity."""
        return -0.5 * (np.asarray(self.A) + np.asarray(self.B) + np.asarray(self.C))

    def matrix4(self) -> np.ndarray:
        """Full (..., 4, 4) block matrix [[quad, beta], [beta^T, K]]."""
        quad = self.quad
        beta = self.beta[..., :, None]
        top = np.concatenate([quad, beta], axis=-1)
        bottom = np.concatenate([self.beta, np.asarray(self.K, dtype=float)[..., None]],
                                axis=-1)[..., None, :]
        return np.concatenate([top, bottom], axis=-2)

    def coeff_for_axis(self, axis_index: int) -> np.ndarray:
        return (self.A, self.B, self.C)[axis_index]


@dataclass(frozen=True)
class ResidualSample:
    t: float
    psi: float
    coeffs: PsiCoefficients


PertEvaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


def compute_f(r_sp, a_sp, r_po, pert: Optional[Union[PertEvaluator, np.ndarray]] = None,
              mu: float = EARTH.mu) -> np.ndarray:
    """Forcing vector combining measured relative acceleration and gravity.

    f = a_sp + mu*(r_sp + r_po)/|r_sp + r_po|^3 - mu*r_po/|r_po|^3 + f_p

    All inputs in the primary body frame; r_po is the primary's own orbit
    position rotated into the body frame. ``pert`` may be a precomputed
    conservative-perturbation array or a callable f_p(r_po, r_sp); omitted
    means perturbations are not modeled (f_p = 0).
    """
    r_sp = np.asarray(r_sp, dtype=float)
    a_sp = np.asarray(a_sp, dtype=float)
    r_po = np.asarray(r_po, dtype=float)
    if not np.all(np.linalg.norm(r_po, axis=-1) > 0):
        raise ValueError("r_po must be nonzero")
    s = r_sp + r_po
    f = (a_sp
         + mu * s / np.linalg.norm(s, axis=-1, keepdims=True) ** 3
         - mu * r_po / np.linalg.norm(r_po, axis=-1, keepdims=True) ** 3)
    if pert is not None:
        f_p = pert(r_po, r_sp) if callable(pert) else np.asarray(pert, dtype=float)
        f = f + f_p
    return f


def psi_coefficients(r_sp_meas, v_sp_meas, f) -> PsiCoefficients:
    """Table of residual parameters from measured relative kinematics."""
    r = np.asarray(r_sp_meas, dtype=float)
    v = np.asarray(v_sp_meas, dtype=float)
    f = np.asarray(f, dtype=float)
    rx, ry, rz = r[..., 0], r[..., 1], r[..., 2]
    r2 = (r * r).sum(axis=-1)
    beta = np.cross(v, r)
    return PsiCoefficients(
        A=rx * rx - r2, B=ry * ry - r2, C=rz * rz - r2,
        D=ry * rx, E=rz * ry, F=rz * rx,
        G=beta[..., 0], H=beta[..., 1], J=beta[..., 2],
        K=(r * f).sum(axis=-1),
    )


def psi(coeffs: PsiCoefficients, omega_meas) -> np.ndarray:
    """Evaluate the residual at measured rates (scalar expansion)."""
    w = np.asarray(omega_meas, dtype=float)
    wx, wy, wz = w[..., 0], w[..., 1], w[..., 2]
    c = coeffs
    return (c.A * wx * wx + c.B * wy * wy + c.C * wz * wz
            + 2.0 * c.D * wx * wy + 2.0 * c.E * wy * wz + 2.0 * c.F * wz * wx
            + 2.0 * c.G * wx + 2.0 * c.H * wy + 2.0 * c.J * wz + c.K)


def psi_matrix_form(coeffs: PsiCoefficients, omega_meas) -> np.ndarray:
    """Evaluate the residual via the block matrix form W^T M W (same value)."""
    w = np.asarray(omega_meas, dtype=float)
    quad = coeffs.quad
    beta = coeffs.beta
    return (np.einsum("...i,...ij,...j->...", w, quad, w)
            + 2.0 * (beta * w).sum(axis=-1) + np.asarray(coeffs.K, dtype=float))


def psi_gradient(coeffs: PsiCoefficients, omega_meas) -> np.ndarray:
    """Half-gradient of the residual with respect to the rates: quad@w + beta."""
    w = np.asarray(omega_meas, dtype=float)
    return np.einsum("...ij,...j->...i", coeffs.quad, w) + coeffs.beta


def expected_psi(r_sp_norm, sigma_g: float) -> np.ndarray:
    """Mean of the residual under white gyro noise: -2 r_sp^2 sigma_g^2."""
    r = np.asarray(r_sp_norm, dtype=float)
    return -2.0 * r * r * sigma_g**2


def psi_variance(coeffs: PsiCoefficients, omega_true, sigma_g: float) -> np.ndarray:
    """Variance of the residual under white gyro noise.

    Standard Gaussian quadratic-form result with the 4x4 block matrix M and
    rate covariance Sigma = diag(sigma^2 I3, 0):

        Var = 2 tr(M Sigma M Sigma) + 4 Wbar^T M Sigma M Wbar
    """
    w = np.asarray(omega_true, dtype=float)
    quad = coeffs.quad
    beta = coeffs.beta
    s2 = sigma_g**2
    # tr(M Sigma M Sigma) = sigma^4 * tr(quad @ quad)
    tr_q2 = np.einsum("...ij,...ji->...", quad, quad)
    # (M W)_1:3 = quad @ w + beta, the only rows Sigma keeps
    g = np.einsum("...ij,...j->...i", quad, w) + beta
    return 2.0 * s2 * s2 * tr_q2 + 4.0 * s2 * (g * g).sum(axis=-1)
