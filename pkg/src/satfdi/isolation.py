"""Fault detection, analytic fault estimators, and isolation by recovery.

Detection is a persistent threshold crossing of |Psi|. After detection each
of the six single-fault hypotheses (scale factor or bias on one gyro axis)
is inverted analytically per sample, the measured rate is corrected under
the hypothesis, and the residual is recomputed from the corrected rate. The
hypothesis whose recovered residual stays inside the threshold wins.

Both quadratic-inversion branches are carried; samples where the axis
coefficient or (for scale factors) the measured rate is too small are
masked as singular rather than raising.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .residual import PsiCoefficients, psi

HYPOTHESES = ("sx", "sy", "sz", "bx", "by", "bz")
_AXIS = {"x": 0, "y": 1, "z": 2}

# singularity guards (see ScenarioConfig for the configurable values)
DEFAULT_EPS_COEFF_REL = 1e-3   # on |A|,|B|,|C| relative to r_sp^2
DEFAULT_EPS_OMEGA = 1e-3       # rad/s, scale-factor estimates only


@dataclass(frozen=True)
class DetectionReport:
    detected: bool
    t_fd: float = float("nan")
    index: int = -1
    threshold: float = float("nan")
    persistence: int = 1


@dataclass(frozen=True)
class HypothesisEstimate:
    hypothesis: str                 # "sx".."bz"
    estimates: np.ndarray           # (2, n) both root branches
    recovered_omega: np.ndarray     # (n, 3) winning branch
    recovered_psi: np.ndarray       # (2, n) both branches
    valid: np.ndarray               # (n,) singularity mask (True = usable)
    score: float
    winning_branch: int             # 0 -> '+' root, 1 -> '-' root
    rms_recovered: float
    spread: float                   # robust normalized spread of the estimates
    point_estimate: float


@dataclass(frozen=True)
class IsolationReport:
    winner: str
    point_estimate: float
    scores: dict[str, float]
    ambiguous: bool
    contenders: tuple[str, ...]
    hypotheses: dict[str, HypothesisEstimate] = field(repr=False, default_factory=dict)
    window_start: int = 0
    window_stop: int = 0


def detect(t, psi_series, threshold: float, persistence: int = 3) -> DetectionReport:
    """First time |psi| exceeds the threshold for `persistence` consecutive samples."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if persistence < 1:
        raise ValueError("persistence must be >= 1")
    t = np.asarray(t, dtype=float)
    p = np.asarray(psi_series, dtype=float)
    over = np.abs(p) > threshold
    over &= np.isfinite(p)
    if persistence > 1:
        runs = over[: len(over) - persistence + 1].copy()
        for k in range(1, persistence):
            runs &= over[k: len(over) - persistence + 1 + k]
    else:
        runs = over
    if not runs.any():
        return DetectionReport(False, threshold=threshold, persistence=persistence)
    idx = int(np.argmax(runs))
    return DetectionReport(True, t_fd=float(t[idx]), index=idx,
                           threshold=threshold, persistence=persistence)


def calibrate_threshold(psi_samples, quantile: float = 0.9999) -> float:
    """Empirical |psi| quantile of a faultless campaign, used as the threshold."""
    if not 0.5 < quantile < 1.0:
        raise ValueError("quantile must lie in (0.5, 1)")
    x = np.abs(np.asarray(psi_samples, dtype=float).ravel())
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise ValueError("no finite samples to calibrate from")
    return float(np.quantile(x, quantile))


def _root_magnitude(psi_val, coeff):
    """sqrt(psi/coeff) with the physically impossible positive-psi side clamped."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.asarray(psi_val, dtype=float) / np.asarray(coeff, dtype=float)
    return np.sqrt(np.clip(ratio, 0.0, None))


def estimate_scale(psi_val, coeff, omega_meas_axis,
                   eps_coeff=0.0, eps_omega: float = DEFAULT_EPS_OMEGA):
    """Scale-factor roots 1/(1 +- sqrt(psi/(coeff w^2))) and the validity mask.

    Samples with |coeff| < eps_coeff or |w| < eps_omega are masked, not
    raised; the minus branch is additionally non-finite where the root
    denominator vanishes.
    """
    w = np.asarray(omega_meas_axis, dtype=float)
    u = _root_magnitude(psi_val, np.asarray(coeff, dtype=float) * w * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        roots = np.stack([1.0 / (1.0 + u), 1.0 / (1.0 - u)])
    valid = (np.abs(coeff) >= eps_coeff) & (np.abs(w) >= eps_omega) & np.isfinite(u)
    return roots, valid


def estimate_bias(psi_val, coeff, eps_coeff=0.0):
    """Bias roots +-sqrt(psi/coeff) (rad/s) and the validity mask."""
    mag = _root_magnitude(psi_val, coeff)
    roots = np.stack([mag, -mag])
    valid = (np.abs(coeff) >= eps_coeff) & np.isfinite(mag)
    return roots, valid


def _recover_axis_deviation(kind, psi_val, coeff, w_axis):
    """Rate corrections (2, n) for both branches, in stable form.

    For either fault kind the corrected rate is w + d with |d| =
    sqrt(psi/coeff); the branches differ in sign convention. The scale
    branches follow sign(w) so that w_hat = w * (1 +- u) without dividing
    by a root that can vanish.
    """
    mag = _root_magnitude(psi_val, coeff)
    if kind == "s":
        s = np.sign(w_axis)
        return np.stack([s * mag, -s * mag])
    return np.stack([-mag, mag])   # w - b_hat with b_hat = +-mag


def _normalized_spread(values) -> float:
    """Median absolute deviation over |median|; large when the series wanders."""
    v = values[np.isfinite(values)]
    if v.size == 0:
        return float("inf")
    med = np.median(v)
    mad = np.median(np.abs(v - med))
    return float(mad / max(abs(med), 1e-30))


def recover_and_decide(omega_meas, coeffs: PsiCoefficients, psi_series,
                       detection: DetectionReport, threshold: float,
                       window: Optional[int] = None,
                       eps_coeff_rel: float = DEFAULT_EPS_COEFF_REL,
                       eps_omega: float = DEFAULT_EPS_OMEGA) -> IsolationReport:
    """Score all six hypotheses on the post-detection window and pick a winner.

    Per sample and hypothesis both inversion branches are recovered and the
    residual recomputed from the corrected rates; a branch's score is the
    fraction of valid samples whose recovered |psi| stays inside the
    threshold. Winner is the argmax score; ties fall back to the smaller
    recovered-residual RMS, then to the steadier estimate series (a constant
    true fault of one kind makes the other kind's implied estimate track the
    rate history instead of staying put).
    """
    if not detection.detected:
        raise ValueError("isolation requires a positive detection")
    w = np.asarray(omega_meas, dtype=float)
    p = np.asarray(psi_series, dtype=float)
    start = detection.index
    stop = len(p) if window is None else min(len(p), start + int(window))
    sl = slice(start, stop)

    wv = w[sl]
    pv = p[sl]
    sub = PsiCoefficients(*(np.asarray(getattr(coeffs, n))[sl]
                            for n in "ABCDEFGHJK"))
    eps_abs = eps_coeff_rel * sub.r_sp_sq

    results: dict[str, HypothesisEstimate] = {}
    for hyp in HYPOTHESES:
        kind, axis = hyp[0], hyp[1]
        ai = _AXIS[axis]
        coeff = np.asarray(sub.coeff_for_axis(ai), dtype=float)
        if kind == "s":
            ests, valid = estimate_scale(pv, coeff, wv[:, ai],
                                         eps_coeff=eps_abs, eps_omega=eps_omega)
        else:
            ests, valid = estimate_bias(pv, coeff, eps_coeff=eps_abs)
        devs = _recover_axis_deviation(kind, pv, coeff, wv[:, ai])

        rec_psi = np.empty((2, len(pv)))
        best = (-1.0, 0)
        for b in range(2):
            w_hat = wv.copy()
            w_hat[:, ai] = wv[:, ai] + devs[b]
            rec_psi[b] = psi(sub, w_hat)
            ok = valid & np.isfinite(rec_psi[b]) & np.isfinite(ests[b])
            n_ok = int(ok.sum())
            score = float((np.abs(rec_psi[b][ok]) <= threshold).sum() / n_ok) if n_ok else 0.0
            if score > best[0]:
                best = (score, b)
        score, wb = best
        ok = valid & np.isfinite(rec_psi[wb]) & np.isfinite(ests[wb])
        w_hat = wv.copy()
        w_hat[:, ai] = wv[:, ai] + devs[wb]
        rms = float(np.sqrt(np.mean(rec_psi[wb][ok] ** 2))) if ok.any() else float("inf")
        point = float(np.median(ests[wb][ok])) if ok.any() else float("nan")
        results[hyp] = HypothesisEstimate(
            hypothesis=hyp, estimates=ests, recovered_omega=w_hat,
            recovered_psi=rec_psi, valid=valid, score=score, winning_branch=wb,
            rms_recovered=rms, spread=_normalized_spread(ests[wb][ok]),
            point_estimate=point)

    # winner: score desc, then recovered-psi RMS asc, then estimate spread asc,
    # then the fixed hypothesis order
    def sort_key(h):
        r = results[h]
        return (-r.score, r.rms_recovered, r.spread, HYPOTHESES.index(h))

    ranked = sorted(HYPOTHESES, key=sort_key)
    winner = ranked[0]
    scores = {h: results[h].score for h in HYPOTHESES}
    top, second = results[ranked[0]].score, results[ranked[1]].score
    ambiguous = (top - second) < 0.05
    contenders = tuple(h for h in ranked if top - results[h].score < 0.05)
    return IsolationReport(
        winner=winner, point_estimate=results[winner].point_estimate,
        scores=scores, ambiguous=ambiguous, contenders=contenders,
        hypotheses=results, window_start=start, window_stop=stop)
