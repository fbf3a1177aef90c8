"""Monte-Carlo campaigns and parameter sweeps.

Each run derives its seed from (base_seed, run_index), so results are
reproducible bit-for-bit regardless of the worker count; aggregation is an
ordered reduction over run indices.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .pipeline import RunRecord, run_once
from .scenario import ScenarioConfig, UncertaintySpec, sample_initial
from .sensors import FaultSpec


@dataclass(frozen=True)
class CampaignResult:
    records: list[RunRecord]
    aggregates: dict[str, dict[str, float]]
    envelope_t: np.ndarray = None          # residual-grid times (first valid run)
    envelope_mean: np.ndarray = None       # per-sample mean of psi across runs
    envelope_std: np.ndarray = None
    psi_stack: np.ndarray = None           # (n_runs, n) when requested

    @property
    def n_runs(self) -> int:
        return len(self.records)


def run_seed(base_seed: int, index: int) -> int:
    """Stable per-run seed from the campaign seed and the run index."""
    return int(np.random.SeedSequence((int(base_seed), int(index))).generate_state(1)[0])


def _campaign_one(args):
    cfg, base_seed, index, threshold, assume_at, keep_psi = args
    seed = run_seed(base_seed, index)
    unc = cfg.uncertainty
    if any(getattr(unc, f) > 0 for f in unc.__dataclass_fields__):
        rng_ic = np.random.default_rng(np.random.SeedSequence((int(base_seed), int(index), 0x1C)))
        cfg = sample_initial(cfg, unc, rng_ic)
    rec = run_once(cfg, seed=seed, threshold=threshold,
                   assume_detected_at=assume_at, collect_series=keep_psi)
    psi = rec.series.psi if (keep_psi and rec.series is not None) else None
    t = rec.series.t if (keep_psi and rec.series is not None) else None
    if keep_psi:
        rec = replace(rec, series=None)   # keep the shipped record light
    return index, rec, t, psi


def _aggregate(values: np.ndarray) -> dict[str, float]:
    v = values[np.isfinite(values)]
    if v.size == 0:
        return {"count": 0.0, "mean": float("nan"), "std": float("nan"),
                "median": float("nan"), "q01": float("nan"), "q99": float("nan")}
    return {"count": float(v.size), "mean": float(v.mean()),
            "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
            "median": float(np.median(v)),
            "q01": float(np.quantile(v, 0.01)), "q99": float(np.quantile(v, 0.99))}


def run_campaign(cfg: ScenarioConfig, n_runs: int, base_seed: int = 0,
                 workers: int = 1, threshold: Optional[float] = None,
                 assume_detected_at: Optional[float] = None,
                 keep_psi: bool = True, return_stack: bool = False) -> CampaignResult:
    """Execute n_runs independent runs and aggregate detection/isolation stats."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = [(cfg, base_seed, i, threshold, assume_detected_at, keep_psi)
            for i in range(n_runs)]
    results: list = [None] * n_runs
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, rec, t, psi in pool.map(_campaign_one, jobs, chunksize=8):
                results[index] = (rec, t, psi)
    else:
        for job in jobs:
            index, rec, t, psi = _campaign_one(job)
            results[index] = (rec, t, psi)

    records = [r[0] for r in results]
    env_t = env_mean = env_std = stack = None
    if keep_psi:
        series = [(t, p) for _, t, p in results if p is not None]
        if series:
            n = min(len(p) for _, p in series)
            stack = np.vstack([p[:n] for _, p in series])
            env_t = series[0][0][:n]
            env_mean = stack.mean(axis=0)
            env_std = stack.std(axis=0, ddof=1) if len(series) > 1 else np.zeros(n)

    det = np.array([r.detected for r in records], dtype=bool)
    valid = np.array([r.valid for r in records], dtype=bool)
    t_fd = np.array([r.t_fd for r in records], dtype=float)
    est = np.array([r.point_estimate for r in records], dtype=float)
    aggregates = {
        "detection_rate": {"count": float(valid.sum()),
                           "mean": float(det[valid].mean()) if valid.any() else float("nan")},
        "t_fd": _aggregate(t_fd[det & valid]) if det.any() else _aggregate(np.array([])),
        "point_estimate": _aggregate(est[det & valid]),
    }
    return CampaignResult(records=records, aggregates=aggregates,
                          envelope_t=env_t, envelope_mean=env_mean, envelope_std=env_std,
                          psi_stack=stack if return_stack else None)


def collect_faultless_psi(cfg: ScenarioConfig, n_runs: int, base_seed: int = 0,
                          workers: int = 1) -> np.ndarray:
    """Faultless campaign residual samples pooled for threshold calibration."""
    res = run_campaign(cfg.with_fault(None), n_runs, base_seed=base_seed,
                       workers=workers, keep_psi=True, return_stack=True,
                       threshold=0.0)
    if res.psi_stack is None:
        raise RuntimeError("faultless campaign produced no residual samples")
    return res.psi_stack.ravel()


@dataclass(frozen=True)
class SweepRecord:
    value: float
    psi_mean: float          # mean residual over the post-activation window
    psi_rms: float
    detected: bool
    t_fd: float
    winner: str
    point_estimate: float


def sweep(cfg: ScenarioConfig, parameter: str, values: Sequence[float],
          base_seed: int = 0, threshold: Optional[float] = None) -> list[SweepRecord]:
    """One run per value of a fault magnitude or the formation baseline.

    parameter: 's' (scale factor), 'b' (bias, rad/s) on the configured fault
    axis, or 'delta_a' (secondary semi-major-axis offset, m). Records the
    mean and RMS of the residual over the post-activation window.
    """
    if len(values) == 0:
        raise ValueError("sweep needs at least one value")
    if parameter not in ("s", "b", "delta_a"):
        raise ValueError(f"unknown sweep parameter {parameter!r}")
    base_fault = cfg.fault
    if parameter in ("s", "b") and base_fault is None:
        base_fault = FaultSpec(axis="x", kind="scale" if parameter == "s" else "bias",
                               value=0.0, t_activate=cfg.grid.t0)
    out = []
    for k, val in enumerate(values):
        c = cfg
        if parameter == "s":
            c = cfg.with_fault(FaultSpec(axis=base_fault.axis, kind="scale",
                                         value=float(val), t_activate=base_fault.t_activate))
        elif parameter == "b":
            c = cfg.with_fault(FaultSpec(axis=base_fault.axis, kind="bias",
                                         value=float(val), t_activate=base_fault.t_activate))
        else:
            c = replace(cfg, offsets=replace(cfg.offsets, da=float(val)))
        rec = run_once(c, seed=run_seed(base_seed, k), threshold=threshold,
                       collect_series=True)
        if not rec.valid:
            raise RuntimeError(f"sweep run failed at value {val}: {rec.error}")
        t_act = c.fault.t_activate if (parameter in ("s", "b") and c.fault) else cfg.grid.t0
        win = rec.series.t >= t_act
        psi_win = rec.series.psi[win]
        out.append(SweepRecord(
            value=float(val), psi_mean=float(psi_win.mean()),
            psi_rms=float(np.sqrt((psi_win**2).mean())),
            detected=rec.detected, t_fd=rec.t_fd,
            winner=rec.winner, point_estimate=rec.point_estimate))
    return out
