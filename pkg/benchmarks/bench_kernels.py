#!/usr/bin/env python3
"""Benchmark the propagation kernels: numba JIT vs the pure-Python fallback.

The fallback is selected with SATFDI_DISABLE_NUMBA=1, which must be set
before the package is imported, so each variant runs in a subprocess.

Usage: python benchmarks/bench_kernels.py [n_repeats]
"""
import json
import os
import subprocess
import sys
import textwrap

WORK = textwrap.dedent("""
    import json, os, time
    import numpy as np
    from satfdi import kernels
    from satfdi.orbits import OrbitalElements, elements_to_state, rsw_frame
    from satfdi.constants import DEG, EARTH

    el = OrbitalElements(a=6783.34174e3, e=0.0014021, i=51.27632*DEG,
                         argp=90.69731*DEG, raan=275.17058*DEG, ta=309.67626*DEG)
    st1 = elements_to_state(el)
    st2 = elements_to_state(OrbitalElements(a=el.a + 1000.0, e=el.e, i=el.i,
                                            argp=el.argp, raan=el.raan, ta=el.ta))
    q0 = kernels.dcm_to_quat(rsw_frame(st1).matrix)
    w0 = np.array([3.0, 2.5, 5.0]) * DEG
    inertia = np.array([2.29e-2, 2.42e-2, 2.14e-2])
    y0 = np.concatenate([st1.r, st1.v, st2.r - st1.r, st2.v - st1.v, q0, w0])
    p = kernels.pack_force_params(EARTH.mu, EARTH.r_eq, EARTH.j2)

    n_steps, dt, every = 12000, 0.01, 10
    kernels.run_formation(y0, p, p, inertia, 100, dt, 10)   # warm-up / JIT
    reps = int(os.environ.get("BENCH_REPS", "5"))
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        out = kernels.run_formation(y0, p, p, inertia, n_steps, dt, every)
        times.append(time.perf_counter() - t0)
    print(json.dumps({
        "numba": kernels.NUMBA_ENABLED,
        "best_s": min(times),
        "mean_s": sum(times) / len(times),
        "check": float(out[-1, 6]),
    }))
""")


def run_variant(disable: bool, reps: int) -> dict:
    env = dict(os.environ, BENCH_REPS=str(reps))
    env["SATFDI_DISABLE_NUMBA"] = "1" if disable else "0"
    res = subprocess.run([sys.executable, "-c", WORK], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    reps = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    print("formation kernel: 120 s at dt=0.01 (12k RK4 steps), decimation 10")
    jit = run_variant(False, reps)
    py = run_variant(True, max(1, reps // 2))
    if jit["check"] != py["check"]:
        raise SystemExit("paths disagree: %r vs %r" % (jit["check"], py["check"]))
    print(f"  numba:    best {jit['best_s']*1e3:9.2f} ms   mean {jit['mean_s']*1e3:9.2f} ms")
    print(f"  fallback: best {py['best_s']*1e3:9.2f} ms   mean {py['mean_s']*1e3:9.2f} ms")
    print(f"  speedup:  {py['best_s']/jit['best_s']:.1f}x  (end state bit-identical)")


if __name__ == "__main__":
    main()
