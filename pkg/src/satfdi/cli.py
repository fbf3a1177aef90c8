"""Command-line entry point.

Subcommands: simulate | campaign | sweep | bounds | calibrate.
Exit codes: 0 success, 2 configuration/usage error, 3 simulation failure.
Diagnostics go to stderr; stdout stays silent unless --stdout echoes the
primary result CSV. The default output directory comes from --out or the
SATFDI_OUT_DIR environment variable.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundInputs, drag_bounds, admissible_sets
from .campaign import collect_faultless_psi, run_campaign, run_seed, sweep as run_sweep
from .csvio import RunManifest, write_csv
from .isolation import calibrate_threshold
from .pipeline import run_once
from .scenario import ConfigError, ScenarioConfig, config_digest, resolve_scenario
from .sensors import FaultSpec
from .constants import DEG

_FAULT_RE = re.compile(r"^([sb])([xyz])=([-+0-9.eE]+)@([-+0-9.eE]+)$")


def parse_fault(text: str) -> FaultSpec:
    m = _FAULT_RE.match(text.strip())
    if not m:
        raise ConfigError(
            f"bad fault spec {text!r}; expected e.g. sx=0.5@56 or by=1.0@56 (bias deg/s)")
    kind = "scale" if m.group(1) == "s" else "bias"
    value = float(m.group(3))
    if kind == "bias":
        value *= DEG
    return FaultSpec(axis=m.group(2), kind=kind, value=value,
                     t_activate=float(m.group(4)))


def _outdir(args) -> Path:
    d = Path(args.out or os.environ.get("SATFDI_OUT_DIR", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _echo(path: Path, args):
    if args.stdout:
        sys.stdout.write(path.read_text())


def _load_config(args) -> ScenarioConfig:
    cfg = resolve_scenario(args.scenario)
    if getattr(args, "fault", None):
        cfg = cfg.with_fault(parse_fault(args.fault))
    if getattr(args, "dt_meas", None):
        from dataclasses import replace
        cfg = replace(cfg, dt_meas=args.dt_meas)
    return cfg


def _ensure_threshold(cfg, args, log) -> float:
    if getattr(args, "threshold", None):
        return args.threshold
    if cfg.fdi.threshold > 0:
        return cfg.fdi.threshold
    n = getattr(args, "calibrate_runs", 20)
    log(f"calibrating threshold from {n} faultless runs "
        f"(quantile {cfg.fdi.quantile}) ...")
    samples = collect_faultless_psi(cfg, n, base_seed=args.seed)
    thr = calibrate_threshold(samples, cfg.fdi.quantile)
    log(f"calibrated threshold: {thr:.6g} m^2/s^2")
    return thr


def cmd_simulate(args, log) -> int:
    cfg = _load_config(args)
    thr = _ensure_threshold(cfg, args, log)
    rec = run_once(cfg, seed=args.seed, threshold=thr, collect_series=True)
    if not rec.valid:
        log(f"simulation failed: {rec.error}")
        return 3
    out = _outdir(args)
    meta = {"config": config_digest(cfg), "seed": args.seed,
            "threshold": repr(thr)}
    s = rec.series
    write_csv(out / "trajectory.csv", "trajectory", {
        "t": s.t_full,
        "rp_x": s.r_primary[:, 0], "rp_y": s.r_primary[:, 1], "rp_z": s.r_primary[:, 2],
        "vp_x": s.v_primary[:, 0], "vp_y": s.v_primary[:, 1], "vp_z": s.v_primary[:, 2],
        "rs_x": s.r_secondary[:, 0], "rs_y": s.r_secondary[:, 1], "rs_z": s.r_secondary[:, 2],
        "q0": s.q[:, 0], "q1": s.q[:, 1], "q2": s.q[:, 2], "q3": s.q[:, 3],
        "w_x": s.omega_full[:, 0], "w_y": s.omega_full[:, 1], "w_z": s.omega_full[:, 2],
    }, meta)
    write_csv(out / "measurements.csv", "measurements", {
        "t": s.t,
        "omega_meas_x": s.omega_meas[:, 0], "omega_meas_y": s.omega_meas[:, 1],
        "omega_meas_z": s.omega_meas[:, 2],
        "r_sp_meas_x": s.r_sp_meas[:, 0], "r_sp_meas_y": s.r_sp_meas[:, 1],
        "r_sp_meas_z": s.r_sp_meas[:, 2],
    }, meta)
    c = s.coeffs
    write_csv(out / "residuals.csv", "residuals", {
        "t": s.t, "psi": s.psi, "A": c.A, "B": c.B, "C": c.C, "D": c.D,
        "E": c.E, "F": c.F, "G": c.G, "H": c.H, "J": c.J, "K": c.K,
    }, meta | ({"detected": int(rec.detected), "t_fd": repr(rec.t_fd)}
               if rec.detected else {"detected": 0}))
    outputs = ["trajectory.csv", "measurements.csv", "residuals.csv"]
    if rec.isolation is not None:
        iso = rec.isolation
        cols = {"t": s.t[iso.window_start:iso.window_stop]}
        for h, est in iso.hypotheses.items():
            b = est.winning_branch
            cols[f"est_{h}"] = est.estimates[b]
            cols[f"psihat_{h}"] = est.recovered_psi[b]
            cols[f"valid_{h}"] = est.valid.astype(int)
        write_csv(out / "hypotheses.csv", "hypotheses", cols,
                  meta | {"winner": iso.winner, "ambiguous": int(iso.ambiguous)})
        outputs.append("hypotheses.csv")
        log(f"detected at t={rec.t_fd:.3f} s; winner {iso.winner}"
            + (" (ambiguous)" if iso.ambiguous else ""))
    else:
        log("no detection" if not rec.detected else "detected, isolation skipped")
    RunManifest(config_digest(cfg), args.seed, __version__, outputs,
                {"threshold": thr, "detected": rec.detected}).write(out / "manifest.json")
    _echo(out / "residuals.csv", args)
    return 0


def cmd_campaign(args, log) -> int:
    if args.runs < 1:
        log("--runs must be >= 1")
        return 2
    cfg = _load_config(args)
    thr = _ensure_threshold(cfg, args, log)
    res = run_campaign(cfg, args.runs, base_seed=args.seed, workers=args.workers,
                       threshold=thr)
    bad = [r for r in res.records if not r.valid]
    if len(bad) == len(res.records):
        log(f"all runs failed; first error: {bad[0].error}")
        return 3
    out = _outdir(args)
    meta = {"config": config_digest(cfg), "seed": args.seed,
            "runs": args.runs, "threshold": repr(thr)}
    rows = {k: [] for k in ("record", "run", "seed", "valid", "detected", "t_fd",
                            "winner", "ambiguous", "point_estimate", "max_abs_psi")}
    for i, r in enumerate(res.records):
        rows["record"].append("run")
        rows["run"].append(i)
        rows["seed"].append(r.seed)
        rows["valid"].append(int(r.valid))
        rows["detected"].append(int(r.detected))
        rows["t_fd"].append(r.t_fd)
        rows["winner"].append(r.winner or "-")
        rows["ambiguous"].append(int(r.ambiguous))
        rows["point_estimate"].append(r.point_estimate)
        rows["max_abs_psi"].append(r.max_abs_psi)
    for stat in ("mean", "std", "median", "q01", "q99"):
        rows["record"].append(stat)
        rows["run"].append(-1)
        rows["seed"].append(-1)
        rows["valid"].append(int(res.aggregates["detection_rate"]["count"]))
        rows["detected"].append(
            int(res.aggregates["detection_rate"]["mean"] * 100) if stat == "mean" else -1)
        rows["t_fd"].append(res.aggregates["t_fd"].get(stat, float("nan")))
        rows["winner"].append("-")
        rows["ambiguous"].append(-1)
        rows["point_estimate"].append(res.aggregates["point_estimate"].get(stat, float("nan")))
        rows["max_abs_psi"].append(float("nan"))
    write_csv(out / "campaign.csv", "campaign", rows, meta)
    outputs = ["campaign.csv"]
    if res.envelope_t is not None:
        write_csv(out / "envelope.csv", "envelope", {
            "t": res.envelope_t, "psi_mean": res.envelope_mean,
            "psi_std": res.envelope_std}, meta)
        outputs.append("envelope.csv")
    RunManifest(config_digest(cfg), args.seed, __version__, outputs,
                {"threshold": thr, "aggregates": res.aggregates}).write(out / "manifest.json")
    agg = res.aggregates
    log(f"{args.runs} runs: detection rate {agg['detection_rate']['mean']:.3f}, "
        f"t_fd mean {agg['t_fd']['mean']:.3f} s std {agg['t_fd']['std']:.3f} s")
    _echo(out / "campaign.csv", args)
    return 0


def _parse_values(args) -> np.ndarray:
    if args.values:
        return np.array([float(x) for x in args.values.split(",")])
    lo, hi, n = args.range.split(":")
    return np.linspace(float(lo), float(hi), int(n))


def cmd_sweep(args, log) -> int:
    cfg = _load_config(args)
    values = _parse_values(args)
    # fault magnitudes arrive in display units (bias in deg/s, delta_a in km)
    if args.param == "b":
        values_si = values * DEG
    elif args.param == "delta_a":
        values_si = values * 1e3
    else:
        values_si = values
    thr = args.threshold or (cfg.fdi.threshold if cfg.fdi.threshold > 0 else None)
    recs = run_sweep(cfg, args.param, values_si, base_seed=args.seed, threshold=thr)
    out = _outdir(args)
    write_csv(out / "sweep.csv", "sweep", {
        "value": values,
        "psi_mean": [r.psi_mean for r in recs],
        "psi_rms": [r.psi_rms for r in recs],
        "detected": [int(r.detected) for r in recs],
        "t_fd": [r.t_fd for r in recs],
        "winner": [r.winner or "-" for r in recs],
        "point_estimate": [r.point_estimate for r in recs],
    }, {"config": config_digest(cfg), "seed": args.seed, "param": args.param})
    RunManifest(config_digest(cfg), args.seed, __version__,
                ["sweep.csv"], {"param": args.param}).write(out / "manifest.json")
    _echo(out / "sweep.csv", args)
    return 0


def _log_grid(spec: str) -> np.ndarray:
    lo, hi, n = spec.split(":")
    return np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(n))


def cmd_bounds(args, log) -> int:
    cfg = _load_config(args)
    st = None
    r_p = cfg.elements.a * (1 - cfg.elements.e**2) / (1 + cfg.elements.e * np.cos(cfg.elements.ta))
    inp = BoundInputs(r_sp=abs(cfg.offsets.da) or 1000.0, r_p=r_p,
                      omega_axis=args.omega_x, s=0.5, b=1e-3,
                      drag=cfg.forces.drag_params)
    curves, params, vals = [], [], []
    for a in _log_grid(args.alpha_grid):
        curves.append("s_plus_vs_alpha")
        params.append(a)
        vals.append(admissible_sets(a, 0.5, inp).s_plus)
    for b in _log_grid(args.beta_grid):
        curves.append("b_plus_vs_beta")
        params.append(b)
        vals.append(admissible_sets(0.5, b, inp).b_plus)
    ratios = drag_bounds(inp)
    for s in np.linspace(0.05, 0.95, 19):
        curves.append("drag_scale_ratio_vs_s")
        params.append(s)
        vals.append(ratios["scale_ratio_coef"] / (1.0 - s))
    for b in _log_grid("1e-4:1e-1:16"):
        curves.append("drag_bias_ratio_vs_b")
        params.append(b)
        vals.append(ratios["bias_ratio_coef"] / b**2)
    out = _outdir(args)
    write_csv(out / "bounds.csv", "bounds",
              {"curve": curves, "param": params, "value": vals},
              {"config": config_digest(cfg), "omega_x": repr(args.omega_x),
               "r_sp": repr(inp.r_sp), "r_p": repr(inp.r_p)})
    RunManifest(config_digest(cfg), 0, __version__, ["bounds.csv"],
                {"omega_x": args.omega_x}).write(out / "manifest.json")
    _echo(out / "bounds.csv", args)
    return 0


def cmd_calibrate(args, log) -> int:
    cfg = _load_config(args)
    samples = collect_faultless_psi(cfg, args.runs, base_seed=args.seed,
                                    workers=args.workers)
    qs = [0.99, 0.999, cfg.fdi.quantile, 0.99999]
    qs = sorted(set(qs))
    thrs = [calibrate_threshold(samples, q) for q in qs]
    out = _outdir(args)
    write_csv(out / "calibration.csv", "calibration", {
        "quantile": qs, "threshold": thrs,
        "n_samples": [samples.size] * len(qs),
    }, {"config": config_digest(cfg), "seed": args.seed, "runs": args.runs})
    RunManifest(config_digest(cfg), args.seed, __version__, ["calibration.csv"],
                {"threshold": dict(zip(map(str, qs), thrs))}).write(out / "manifest.json")
    log(f"threshold at quantile {cfg.fdi.quantile}: "
        f"{calibrate_threshold(samples, cfg.fdi.quantile):.6g} m^2/s^2")
    _echo(out / "calibration.csv", args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="satfdi",
                                 description="Formation-flying gyro FDI toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fault=True):
        p.add_argument("scenario", help="preset name (scenario1/scenario2) or config path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--stdout", action="store_true",
                       help="echo the primary CSV to stdout")
        p.add_argument("--dt-meas", type=float, default=None, dest="dt_meas",
                       help="override the measurement sampling step (s)")
        if fault:
            p.add_argument("--fault", default=None,
                           help="fault spec, e.g. sx=0.5@56 (scale) or by=1.0@56 (bias deg/s)")

    p = sub.add_parser("simulate", help="one end-to-end run")
    common(p)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--calibrate-runs", type=int, default=20)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("campaign", help="Monte-Carlo campaign")
    common(p)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--calibrate-runs", type=int, default=100)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("sweep", help="fault-magnitude or baseline sweep")
    common(p)
    p.add_argument("--param", choices=("s", "b", "delta_a"), required=True)
    p.add_argument("--values", default=None, help="comma-separated values")
    p.add_argument("--range", default=None, help="lo:hi:count (linear)")
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="perturbation error-bound curves")
    common(p, fault=False)
    p.add_argument("--alpha-grid", default="1e-3:1:25")
    p.add_argument("--beta-grid", default="1e-3:1:25")
    p.add_argument("--omega-x", type=float, default=0.055,
                   help="rate on the faulty axis used in the bounds (rad/s)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("calibrate", help="threshold calibration from faultless runs")
    common(p, fault=False)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "command", None) == "sweep" and not (args.values or args.range):
        ap.error("sweep requires --values or --range")

    def log(msg):
        print(msg, file=sys.stderr)

    try:
        return args.func(args, log)
    except ConfigError as exc:
        log(f"config error: {exc}")
        return 2
    except (ValueError, OSError) as exc:
        log(f"error: {exc}")
        return 2
    except RuntimeError as exc:
        log(f"simulation failure: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
