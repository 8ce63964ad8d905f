"""Hot inner loops, each in a numba and a plain-NumPy flavour.

The public names at the bottom pick one flavour according to
``_accel.HAS_NUMBA``; both flavours stay importable as ``*_nb``/``*_np``
for the benchmark and for cross-checking tests.
"""
from __future__ import annotations

import numpy as np

from ._accel import HAS_NUMBA, njit

# --------------------------------------------------------------------------
# x21 one-variable march
# --------------------------------------------------------------------------


def x21_march_np(phi, P, a0, h, diag):
    N = phi.size - 1
    x = np.empty(N + 1, dtype=np.complex128)
    x[0] = 1.0
    for k in range(1, N + 1):
        s = np.dot(P[1:k], x[k - 1 : 0 : -1]) if k > 1 else 0.0
        rhs = phi[k] - h * s - 0.5 * h * (P[k] - 0.5 * h * phi[k] * a0) * x[0]
        x[k] = rhs / diag
    return x


@njit(cache=True)
def x21_march_nb(phi, P, a0, h, diag):
    N = phi.size - 1
    x = np.empty(N + 1, dtype=np.complex128)
    x[0] = 1.0
    for k in range(1, N + 1):
        s = 0j
        for l in range(1, k):
            s += P[l] * x[k - l]
        rhs = phi[k] - h * s - 0.5 * h * (P[k] - 0.5 * h * phi[k] * a0) * x[0]
        x[k] = rhs / diag
    return x


# --------------------------------------------------------------------------
# RK4 for  x' = -i w0 x - int_0^tau a(tau - s) x(s) ds + src(tau)
# --------------------------------------------------------------------------
# Memory integrals use trapezoid weights over the stored nodes plus a
# partial panel [t_k, tau] closed by the current stage estimate.


def vide_rk4_np(a, a_half, omega0, h, nsteps, x0, src, src_half):
    x = np.zeros(nsteps + 1, dtype=np.complex128)
    x[0] = x0
    w = -1j * omega0
    for k in range(nsteps):
        xk = x[k]
        # memory at t_k, nodes 0..k
        if k == 0:
            m1 = 0j
            mh = 0j
        else:
            m1 = h * (0.5 * a[k] * x[0] + np.dot(a[k - 1 : 0 : -1], x[1:k]) + 0.5 * a[0] * xk)
            mh = h * (0.5 * a_half[k] * x[0] + np.dot(a_half[k - 1 : 0 : -1], x[1:k]) + 0.5 * a_half[0] * xk)
        # nodes 0..k against t_{k+1}, last node weight 1 (interior)
        mf = h * (0.5 * a[k + 1] * x[0] + np.dot(a[k:0:-1], x[1 : k + 1])) if k > 0 else 0.5 * h * a[1] * x[0]
        k1 = w * xk - m1 + src[k]
        u2 = xk + 0.5 * h * k1
        k2 = w * u2 - (mh + 0.25 * h * (a_half[0] * xk + a[0] * u2)) + src_half[k]
        u3 = xk + 0.5 * h * k2
        k3 = w * u3 - (mh + 0.25 * h * (a_half[0] * xk + a[0] * u3)) + src_half[k]
        u4 = xk + h * k3
        k4 = w * u4 - (mf + 0.5 * h * a[0] * u4) + src[k + 1]
        x[k + 1] = xk + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


@njit(cache=True)
def vide_rk4_nb(a, a_half, omega0, h, nsteps, x0, src, src_half):
    x = np.zeros(nsteps + 1, dtype=np.complex128)
    x[0] = x0
    w = -1j * omega0
    for k in range(nsteps):
        xk = x[k]
        if k == 0:
            m1 = 0j
            mh = 0j
            mf = 0.5 * h * a[1] * x[0]
        else:
            s1 = 0.5 * a[k] * x[0] + 0.5 * a[0] * xk
            sh = 0.5 * a_half[k] * x[0] + 0.5 * a_half[0] * xk
            sf = 0.5 * a[k + 1] * x[0] + a[1] * xk
            for l in range(1, k):
                xl = x[l]
                s1 += a[k - l] * xl
                sh += a_half[k - l] * xl
                sf += a[k + 1 - l] * xl
            m1 = h * s1
            mh = h * sh
            mf = h * sf
        k1 = w * xk - m1 + src[k]
        u2 = xk + 0.5 * h * k1
        k2 = w * u2 - (mh + 0.25 * h * (a_half[0] * xk + a[0] * u2)) + src_half[k]
        u3 = xk + 0.5 * h * k2
        k3 = w * u3 - (mh + 0.25 * h * (a_half[0] * xk + a[0] * u3)) + src_half[k]
        u4 = xk + h * k3
        k4 = w * u4 - (mf + 0.5 * h * a[0] * u4) + src[k + 1]
        x[k + 1] = xk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


@njit(cache=True)
def v_rows_nb(a, a_half, omega0, h, S, S_half):
    """All rows of the v table; row i is driven by S[i, :i+1], S_half[i, :i]."""
    N = S.shape[0] - 1
    out = np.zeros((N + 1, N + 1), dtype=np.complex128)
    for i in range(1, N + 1):
        row = vide_rk4_nb(a, a_half, omega0, h, i, 0j, S[i, : i + 1], S_half[i, :i])
        out[i, : i + 1] = row
    return out


def v_rows_np(a, a_half, omega0, h, S, S_half):
    N = S.shape[0] - 1
    out = np.zeros((N + 1, N + 1), dtype=np.complex128)
    for i in range(1, N + 1):
        out[i, : i + 1] = vide_rk4_np(a, a_half, omega0, h, i, 0j, S[i, : i + 1], S_half[i, :i])
    return out


if HAS_NUMBA:
    x21_march = x21_march_nb
    vide_rk4 = vide_rk4_nb
    v_rows = v_rows_nb
else:
    x21_march = x21_march_np
    vide_rk4 = vide_rk4_np
    v_rows = v_rows_np
