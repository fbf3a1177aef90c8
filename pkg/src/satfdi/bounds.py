"""Closed-form worst-case error bounds for unmodeled J2 and drag.

An unmodeled perturbation shifts the residual only through its forcing term
(delta_psi = r_sp . delta_f), which propagates to the analytic scale-factor
and bias estimates. The J2 route takes the worst-case sum of both
satellites' oblateness accelerations; the drag route keeps the difference
of the two exponential-atmosphere drag magnitudes on circular orbits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import EARTH
from .dynamics import DragParams


@dataclass(frozen=True)
class BoundInputs:
    r_sp: float                 # m, relative distance
    r_p: float                  # m, primary orbit radius
    omega_axis: float = 0.0     # rad/s, true rate on the faulty axis
    s: float = 0.5              # hypothesized scale factor
    b: float = 0.0              # rad/s, hypothesized bias
    drag: DragParams = field(default_factory=DragParams)
    mu: float = EARTH.mu
    r_eq: float = EARTH.r_eq
    j2: float = EARTH.j2

    def __post_init__(self):
        if self.r_sp <= 0:
            raise ValueError("r_sp must be positive")
        if self.r_p <= EARTH.r_eq * 0.9:
            raise ValueError("r_p must exceed the Earth radius")


@dataclass(frozen=True)
class AdmissibleSets:
    alpha: float
    beta: float
    s_plus: float               # scale factors in (0, s_plus) stay below alpha
    b_plus: float               # biases above b_plus stay below beta
    s_set_empty: bool

    def __post_init__(self):
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise ValueError("alpha and beta must lie in (0, 1]")


def delta_psi_from_perturbation(r_sp, delta_f) -> np.ndarray:
    """Residual shift caused by an unmodeled forcing difference: r_sp . delta_f."""
    r = np.asarray(r_sp, dtype=float)
    df = np.asarray(delta_f, dtype=float)
    return (r * df).sum(axis=-1)


def delta_s_from_delta_psi(s: float, psi_tilde, delta_psi) -> np.ndarray:
    """First-order scale-factor error from a residual shift (0 < s < 1).

    d s = s (1 - s) / (2 psi) * d psi, the variation of the analytic
    estimator around the fault-only residual.
    """
    if not 0 < s < 1:
        raise ValueError("derivation assumes 0 < s < 1")
    return s * (1.0 - s) / (2.0 * np.asarray(psi_tilde, dtype=float)) \
        * np.asarray(delta_psi, dtype=float)


def max_combined_j2(r_p: float, r_sp: float, mu: float = EARTH.mu,
                    r_eq: float = EARTH.r_eq, j2: float = EARTH.j2) -> float:
    """Worst-case sum of both satellites' J2 acceleration magnitudes."""
    if r_p <= 0:
        raise ValueError("r_p must be positive")
    return 3.0 * mu * j2 * r_eq**2 * (1.0 / (r_p**2 + r_sp**2) ** 2 + 1.0 / r_p**4)


def max_delta_s_j2(inp: BoundInputs) -> float:
    """Worst-case scale-factor estimation error from unmodeled J2.

    (3 / (r_sp w^2)) * (s / (1 - s)) * mu J2 Re^2 / r_p^4
    """
    if not 0 < inp.s < 1:
        raise ValueError("bound assumes 0 < s < 1")
    if inp.omega_axis == 0:
        raise ValueError("bound requires a nonzero rate on the faulty axis")
    return (3.0 / (inp.r_sp * inp.omega_axis**2) * inp.s / (1.0 - inp.s)
            * inp.mu * inp.j2 * inp.r_eq**2 / inp.r_p**4)


def max_delta_b_j2(inp: BoundInputs) -> float:
    """Worst-case bias estimation error from unmodeled J2: (3/b) mu J2 Re^2 / r_p^4."""
    if inp.b == 0:
        raise ValueError("bound requires a nonzero bias")
    return 3.0 / abs(inp.b) * inp.mu * inp.j2 * inp.r_eq**2 / inp.r_p**4


def admissible_sets(alpha: float, beta: float, inp: BoundInputs) -> AdmissibleSets:
    """Fault ranges whose relative J2-induced error stays below alpha / beta.

    s_plus = 1 - 3 mu J2 Re^2 / (alpha r_sp w^2 r_p^4); empty when <= 0.
    b_plus = sqrt(3 mu J2 Re^2 / (beta r_p^4)).
    """
    if not (0 < alpha <= 1 and 0 < beta <= 1):
        raise ValueError("alpha and beta must lie in (0, 1]")
    if inp.omega_axis == 0:
        raise ValueError("scale-factor set requires a nonzero rate")
    k = inp.mu * inp.j2 * inp.r_eq**2 / inp.r_p**4
    s_plus = 1.0 - 3.0 * k / (alpha * inp.r_sp * inp.omega_axis**2)
    b_plus = math.sqrt(3.0 * k / beta)
    return AdmissibleSets(alpha=alpha, beta=beta, s_plus=s_plus, b_plus=b_plus,
                          s_set_empty=s_plus <= 0.0)


def drag_delta_f(inp: BoundInputs) -> float:
    """Magnitude of the drag acceleration difference between the satellites.

    Circular orbits, equal ballistic properties, the secondary displaced
    radially by r_sp. Exponentials are combined before evaluation so the
    sea-level-referenced atmosphere never overflows.
    """
    d = inp.drag
    h_p = inp.r_p - inp.r_eq
    # rho(r) * v^2(r) / 2 * bcoef with v^2 = mu / r, factored at the primary
    base = 0.5 * d.bcoef * inp.mu * d.rho0 * math.exp(-(h_p - d.h0) / d.scale_height)
    bracket = abs(math.exp(-inp.r_sp / d.scale_height) / (inp.r_p + inp.r_sp)
                  - 1.0 / inp.r_p)
    return base * bracket


def drag_bounds(inp: BoundInputs) -> dict[str, float]:
    """Worst-case scale and bias errors from unmodeled drag, plus ratio forms.

    The ratio forms are the fault-independent coefficients:
        max|ds|/s = scale_ratio_coef / (1 - s)
        max|db|/b = bias_ratio_coef / b^2
    """
    df = drag_delta_f(inp)
    scale_coef = df / (2.0 * inp.r_sp * inp.omega_axis**2) if inp.omega_axis else float("inf")
    bias_coef = df / 2.0
    out = {
        "delta_f": df,
        "scale_ratio_coef": scale_coef,
        "bias_ratio_coef": bias_coef,
    }
    if 0 < inp.s < 1:
        out["max_delta_s"] = scale_coef * inp.s / (1.0 - inp.s)
    if inp.b != 0:
        out["max_delta_b"] = bias_coef / abs(inp.b)
    return out
