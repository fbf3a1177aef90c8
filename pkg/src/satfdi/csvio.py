"""Versioned CSV schemas with exact float round-trip, plus run manifests.

Every file starts with a ``# schema=<name>/<version>`` line and optional
``# key=value`` provenance comments, then a column-name row and a units row.
Floats are rendered with ``repr``, which round-trips float64 exactly, so a
re-read equals the written array bit for bit.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

SCHEMA_VERSION = 1

# name -> (columns, units, types); type "f" float, "i" int, "s" string
SCHEMAS = {
    "trajectory": (
        ["t", "rp_x", "rp_y", "rp_z", "vp_x", "vp_y", "vp_z",
         "rs_x", "rs_y", "rs_z", "q0", "q1", "q2", "q3", "w_x", "w_y", "w_z"],
        ["s"] + ["m"] * 3 + ["m/s"] * 3 + ["m"] * 3 + ["-"] * 4 + ["rad/s"] * 3,
        "f" * 17,
    ),
    "measurements": (
        ["t", "omega_meas_x", "omega_meas_y", "omega_meas_z",
         "r_sp_meas_x", "r_sp_meas_y", "r_sp_meas_z"],
        ["s"] + ["rad/s"] * 3 + ["m"] * 3,
        "f" * 7,
    ),
    "residuals": (
        ["t", "psi", "A", "B", "C", "D", "E", "F", "G", "H", "J", "K"],
        ["s", "m2/s2"] + ["m2"] * 6 + ["m2/s"] * 3 + ["m2/s2"],
        "f" * 12,
    ),
    "hypotheses": (
        ["t"]
        + [f"{k}_{h}" for h in ("sx", "sy", "sz", "bx", "by", "bz")
           for k in ("est", "psihat", "valid")],
        ["s"] + sum((["-" if h[0] == "s" else "rad/s", "m2/s2", "-"]
                     for h in ("sx", "sy", "sz", "bx", "by", "bz")), []),
        "f" + "ffi" * 6,
    ),
    "campaign": (
        ["record", "run", "seed", "valid", "detected", "t_fd", "winner",
         "ambiguous", "point_estimate", "max_abs_psi"],
        ["-", "-", "-", "-", "-", "s", "-", "-", "- or rad/s", "m2/s2"],
        "siiiifsiff",
    ),
    "envelope": (
        ["t", "psi_mean", "psi_std"],
        ["s", "m2/s2", "m2/s2"],
        "fff",
    ),
    "sweep": (
        ["value", "psi_mean", "psi_rms", "detected", "t_fd", "winner",
         "point_estimate"],
        ["- or rad/s or m", "m2/s2", "m2/s2", "-", "s", "-", "- or rad/s"],
        "fffifsf",
    ),
    "bounds": (
        ["curve", "param", "value"],
        ["-", "- (alpha/beta or fault size)", "- or rad/s"],
        "sff",
    ),
    "calibration": (
        ["quantile", "threshold", "n_samples"],
        ["-", "m2/s2", "-"],
        "ffi",
    ),
}


def _render(value, typ: str) -> str:
    if typ == "f":
        return repr(float(value))
    if typ == "i":
        return str(int(value))
    return str(value)


def write_csv(path, schema: str, columns: dict, meta: Optional[dict] = None):
    """Write named columns under a registered schema; order follows the schema."""
    names, units, types = SCHEMAS[schema]
    missing = [n for n in names if n not in columns]
    if missing:
        raise ValueError(f"schema {schema}: missing columns {missing}")
    cols = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    n_rows = len(cols[0])
    if any(len(c) != n_rows for c in cols):
        raise ValueError("all columns must have equal length")

    buf = io.StringIO()
    buf.write(f"# schema={schema}/{SCHEMA_VERSION}\n")
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    w.writerow(units)
    for r in range(n_rows):
        w.writerow([_render(c[r], t) for c, t in zip(cols, types)])
    Path(path).write_text(buf.getvalue())


@dataclass(frozen=True)
class CsvTable:
    schema: str
    version: int
    meta: dict
    names: list
    units: list
    columns: dict


def read_csv(path) -> CsvTable:
    """Read a schema-tagged CSV back; float columns round-trip exactly."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise ValueError(f"{path}: missing schema header")
    schema, version = lines[0].split("=", 1)[1].split("/")
    meta = {}
    k = 1
    while k < len(lines) and lines[k].startswith("# "):
        key, _, val = lines[k][2:].partition("=")
        meta[key] = val
        k += 1
    rows = list(csv.reader(lines[k:]))
    names, units, data = rows[0], rows[1], rows[2:]
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}")
    types = SCHEMAS[schema][2]
    if names != SCHEMAS[schema][0]:
        raise ValueError(f"{path}: column names do not match schema {schema}")
    columns = {}
    for j, (name, typ) in enumerate(zip(names, types)):
        raw = [r[j] for r in data]
        if typ == "f":
            columns[name] = np.array([float(x) for x in raw], dtype=float)
        elif typ == "i":
            columns[name] = np.array([int(x) for x in raw], dtype=int)
        else:
            columns[name] = np.array(raw, dtype=object)
    return CsvTable(schema=schema, version=int(version), meta=meta,
                    names=names, units=units, columns=columns)


@dataclass(frozen=True)
class RunManifest:
    config_digest: str
    seed: int
    version: str
    outputs: list
    extra: dict = field(default_factory=dict)

    def write(self, path):
        payload = {"config_digest": self.config_digest, "seed": self.seed,
                   "version": self.version, "outputs": self.outputs,
                   "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                   **self.extra}
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
