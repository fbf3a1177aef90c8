"""Fixed-step RK4 propagation kernels.

These inner loops dominate runtime (12k steps per 120 s run at dt=0.01 s,
times thousands of Monte-Carlo runs), so they are compiled with numba by
default. Set ``SATFDI_DISABLE_NUMBA=1`` before import to run the identical
functions as pure Python/numpy; results are unchanged, only slower.
``benchmarks/bench_kernels.py`` times both paths.

Conventions:
  - quaternion is scalar-first and maps ECI components to body components;
  - the formation kernel integrates the primary absolute state plus the
    secondary state *relative* to it. Differencing two absolute ~6.8e6 m
    positions would leave ~1e-9 m float noise on the ~1e3 m baseline, which
    the downstream 1/h^2 finite-difference stencil amplifies above the
    residual floor; integrating the relative state keeps it smooth.

Force parameter vector layout (float64[9]):
  [mu, j2_on, r_eq, j2, drag_on, cd*S/m, rho0, h0, H]
"""
from __future__ import annotations

import math
import os

import numpy as np

NUMBA_ENABLED = os.environ.get("SATFDI_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")

if NUMBA_ENABLED:
    try:
        from numba import njit as _numba_njit

        def _jit(fn):
            return _numba_njit(cache=True)(fn)
    except ImportError:  # pragma: no cover - numba is a hard dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def _jit(fn):
        return fn


FP_MU, FP_J2_ON, FP_REQ, FP_J2, FP_DRAG_ON, FP_BCOEF, FP_RHO0, FP_H0, FP_H = range(9)


def pack_force_params(mu, r_eq, j2_coef, j2_on=False, drag_on=False,
                      bcoef=0.0, rho0=0.0, h0=0.0, scale_height=1.0):
    """Build the kernel force-parameter vector. ``bcoef`` is Cd*S/m (m^2/kg)."""
    return np.array([mu, 1.0 if j2_on else 0.0, r_eq, j2_coef,
                     1.0 if drag_on else 0.0, bcoef, rho0, h0, scale_height],
                    dtype=np.float64)


@_jit
def _accel(r, v, p, out):
    rx, ry, rz = r[0], r[1], r[2]
    r2 = rx * rx + ry * ry + rz * rz
    rn = math.sqrt(r2)
    inv_r3 = 1.0 / (r2 * rn)
    mu = p[FP_MU]
    out[0] = -mu * rx * inv_r3
    out[1] = -mu * ry * inv_r3
    out[2] = -mu * rz * inv_r3
    if p[FP_J2_ON] != 0.0:
        req = p[FP_REQ]
        c = -1.5 * mu * p[FP_J2] * req * req / (r2 * r2 * rn)
        z2 = (rz / rn) ** 2
        out[0] += c * (1.0 - 5.0 * z2) * rx
        out[1] += c * (1.0 - 5.0 * z2) * ry
        out[2] += c * (3.0 - 5.0 * z2) * rz
    if p[FP_DRAG_ON] != 0.0:
        h = rn - p[FP_REQ]
        rho = p[FP_RHO0] * math.exp(-(h - p[FP_H0]) / p[FP_H])
        vn = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        c = -0.5 * rho * vn * p[FP_BCOEF]
        out[0] += c * v[0]
        out[1] += c * v[1]
        out[2] += c * v[2]


@_jit
def _attitude_rhs(q, w, inertia, dq, dw):
    wx, wy, wz = w[0], w[1], w[2]
    dq[0] = 0.5 * (-wx * q[1] - wy * q[2] - wz * q[3])
    dq[1] = 0.5 * (wx * q[0] + wz * q[2] - wy * q[3])
    dq[2] = 0.5 * (wy * q[0] - wz * q[1] + wx * q[3])
    dq[3] = 0.5 * (wz * q[0] + wy * q[1] - wx * q[2])
    dw[0] = (inertia[1] - inertia[2]) / inertia[0] * wy * wz
    dw[1] = (inertia[2] - inertia[0]) / inertia[1] * wz * wx
    dw[2] = (inertia[0] - inertia[1]) / inertia[2] * wx * wy


@_jit
def _rhs(y, rhs_id, p1, p2, inertia, dy):
    """System right-hand side.

    rhs_id 0: formation, y = [rA, vA, dr, dv, q, w] (19 states)
    rhs_id 1: single orbit, y = [r, v] (6 states)
    rhs_id 2: attitude, y = [q, w] (7 states)
    """
    if rhs_id == 0:
        aA = np.empty(3)
        aB = np.empty(3)
        rB = np.empty(3)
        vB = np.empty(3)
        for i in range(3):
            rB[i] = y[i] + y[6 + i]
            vB[i] = y[3 + i] + y[9 + i]
        _accel(y[0:3], y[3:6], p1, aA)
        _accel(rB, vB, p2, aB)
        for i in range(3):
            dy[i] = y[3 + i]
            dy[3 + i] = aA[i]
            dy[6 + i] = y[9 + i]
            dy[9 + i] = aB[i] - aA[i]
        _attitude_rhs(y[12:16], y[16:19], inertia, dy[12:16], dy[16:19])
    elif rhs_id == 1:
        a = np.empty(3)
        _accel(y[0:3], y[3:6], p1, a)
        for i in range(3):
            dy[i] = y[3 + i]
            dy[3 + i] = a[i]
    else:
        _attitude_rhs(y[0:4], y[4:7], inertia, dy[0:4], dy[4:7])


@_jit
def rk4_loop(y0, rhs_id, p1, p2, inertia, n_steps, dt, every, out):
    """Classical RK4 with per-step quaternion renormalization and decimation.

    Stores every ``every``-th state (including step 0) into ``out``; returns
    the number of rows written.
    """
    ny = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(ny)
    k2 = np.empty(ny)
    k3 = np.empty(ny)
    k4 = np.empty(ny)
    tmp = np.empty(ny)
    m = 0
    for k in range(n_steps + 1):
        if k % every == 0:
            for i in range(ny):
                out[m, i] = y[i]
            m += 1
        if k == n_steps:
            break
        _rhs(y, rhs_id, p1, p2, inertia, k1)
        for i in range(ny):
            tmp[i] = y[i] + 0.5 * dt * k1[i]
        _rhs(tmp, rhs_id, p1, p2, inertia, k2)
        for i in range(ny):
            tmp[i] = y[i] + 0.5 * dt * k2[i]
        _rhs(tmp, rhs_id, p1, p2, inertia, k3)
        for i in range(ny):
            tmp[i] = y[i] + dt * k3[i]
        _rhs(tmp, rhs_id, p1, p2, inertia, k4)
        for i in range(ny):
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if rhs_id == 0:
            qn = math.sqrt(y[12] ** 2 + y[13] ** 2 + y[14] ** 2 + y[15] ** 2)
            for i in range(12, 16):
                y[i] /= qn
        elif rhs_id == 2:
            qn = math.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2 + y[3] ** 2)
            for i in range(4):
                y[i] /= qn
    return m


_DUMMY_P = np.zeros(9)
_DUMMY_I = np.ones(3)


def run_formation(y0, p_primary, p_secondary, inertia, n_steps, dt, every):
    """Propagate the 19-state formation system; returns the decimated (m,19) array."""
    out = np.empty((n_steps // every + 1, 19))
    rk4_loop(np.asarray(y0, dtype=np.float64), 0,
             np.asarray(p_primary, dtype=np.float64),
             np.asarray(p_secondary, dtype=np.float64),
             np.asarray(inertia, dtype=np.float64), n_steps, float(dt), every, out)
    return out


def run_orbit(y0, params, n_steps, dt, every):
    """Propagate a single 6-state orbit; returns the decimated (m,6) array."""
    out = np.empty((n_steps // every + 1, 6))
    rk4_loop(np.asarray(y0, dtype=np.float64), 1,
             np.asarray(params, dtype=np.float64), _DUMMY_P, _DUMMY_I,
             n_steps, float(dt), every, out)
    return out


def run_attitude(y0, inertia, n_steps, dt, every):
    """Propagate the 7-state attitude system; returns the decimated (m,7) array."""
    out = np.empty((n_steps // every + 1, 7))
    rk4_loop(np.asarray(y0, dtype=np.float64), 2, _DUMMY_P, _DUMMY_P,
             np.asarray(inertia, dtype=np.float64), n_steps, float(dt), every, out)
    return out


def quat_to_dcm(q):
    """Scalar-first unit quaternion -> ECI-to-body DCM. Vectorized over (..., 4)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    row0 = np.stack([1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)], axis=-1)
    row1 = np.stack([2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)], axis=-1)
    row2 = np.stack([2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def dcm_to_quat(m):
    """ECI-to-body DCM -> scalar-first unit quaternion (positive scalar part)."""
    m = np.asarray(m, dtype=float)
    tr = float(np.trace(m))
    q = np.empty(4)
    if tr > 0:
        s = 0.5 / math.sqrt(tr + 1.0)
        q[0] = 0.25 / s
        q[1] = (m[1, 2] - m[2, 1]) * s
        q[2] = (m[2, 0] - m[0, 2]) * s
        q[3] = (m[0, 1] - m[1, 0]) * s
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 2.0 * math.sqrt(max(1e-30, 1.0 + m[i, i] - m[j, j] - m[k, k]))
        q[i + 1] = 0.25 * s
        q[0] = (m[j, k] - m[k, j]) / s
        q[j + 1] = (m[i, j] + m[j, i]) / s
        q[k + 1] = (m[i, k] + m[k, i]) / s
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return q
