"""Green's-function route: u(tau), v(tau) and the coefficient set B1..B3.

Used as the independent oracle for the integral-equation route::

    u' + i w0 u + int_0^tau alpha1*(tau - t') u(t') dt' = 0,            u(0) = 1
    v' + i w0 v + int_0^tau alpha1*(tau - t') v(t') dt'
        = 1/2 int_0^t [alpha2* - alpha1*](tau - t') conj(u(t - t')) dt',  v(0) = 0

The source of the v equation integrates up to the final time ``t`` (not
``tau``), so v is a two-index table ``v[i, k] = v(t_i; tau = t_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import v_rows, vide_rk4
from .coefffuncs import OneVarTable, TwoVarTable, _check_grid
from .errors import SingularityError
from .kernels import ResponseKernel, TimeGrid

SINGULARITY_THRESHOLD = 1e-8


@dataclass(frozen=True)
class GreenSolution:
    grid: TimeGrid
    u: np.ndarray
    v: np.ndarray  # (N+1, N+1), lower triangle


def solve_u(kernel: ResponseKernel, omega0: float, grid: TimeGrid) -> np.ndarray:
    _check_grid(kernel.grid, grid)
    a = np.conj(kernel.a1)
    ah = np.conj(kernel.half(1))
    zeros = np.zeros(grid.N + 1, dtype=complex)
    u = vide_rk4(a, ah, float(omega0), grid.h, grid.N, 1.0 + 0j, zeros, zeros[:-1])
    if not np.all(np.isfinite(u)):
        bad = int(np.argmin(np.isfinite(u)))
        raise OverflowError(f"green: u overflowed at t={bad * grid.h:g}")
    return u


def v_sources(kernel: ResponseKernel, grid: TimeGrid, u: np.ndarray):
    """Right-hand sides ``S[i, k]`` at nodes and ``S_half[i, k]`` at ``t_k + h/2``."""
    h, N = grid.h, grid.N
    # d(s) = alpha2*(s) - alpha1*(s), on signed lags
    d_full = np.conj(kernel.signed(2) - kernel.signed(1))
    d_half = np.conj(kernel.signed(2, half=True) - kernel.signed(1, half=True))
    S = np.zeros((N + 1, N + 1), dtype=complex)
    S_half = np.zeros((N + 1, N), dtype=complex)
    if not np.any(d_full):
        return S, S_half
    idx = np.arange(N + 1)
    lag = idx[:, None] - idx[None, :]
    D = d_full[lag + N]
    Dh = d_half[lag[:N] + N]
    for i in range(1, N + 1):
        w = np.full(i + 1, 0.5 * h)  # includes the overall 1/2
        w[0] = w[-1] = 0.25 * h
        ubar = w * np.conj(u[i::-1])
        S[i, : i + 1] = D[: i + 1, : i + 1] @ ubar
        S_half[i, :i] = Dh[:i, : i + 1] @ ubar
    return S, S_half


def solve_v(kernel: ResponseKernel, omega0: float, grid: TimeGrid, u: np.ndarray) -> np.ndarray:
    _check_grid(kernel.grid, grid)
    S, S_half = v_sources(kernel, grid, u)
    if not np.any(S) and not np.any(S_half):
        return np.zeros((grid.N + 1, grid.N + 1), dtype=complex)
    a = np.conj(kernel.a1)
    ah = np.conj(kernel.half(1))
    v = v_rows(a, ah, float(omega0), grid.h, S, S_half)
    if not np.all(np.isfinite(v)):
        raise OverflowError("green: v overflowed")
    return v


def solve_green(kernel: ResponseKernel, omega0: float, grid: TimeGrid) -> GreenSolution:
    u = solve_u(kernel, omega0, grid)
    return GreenSolution(grid, u, solve_v(kernel, omega0, grid, u))


def _check_singularity(u: np.ndarray, grid: TimeGrid, threshold: float = SINGULARITY_THRESHOLD):
    small = np.nonzero(np.abs(u) < threshold)[0]
    if small.size:
        k = int(small[0])
        raise SingularityError(
            f"green: |u(t)| = {abs(u[k]):.2e} below {threshold:g} at t={k * grid.h:g}; "
            "the coefficients diverge there (strong-coupling zero of u)",
            time=k * grid.h,
            index=k,
        )


def xbar_tables(sol: GreenSolution) -> dict:
    """x11bar, x21bar and ybar built from u and v."""
    grid, u, v = sol.grid, sol.u, sol.v
    _check_singularity(u, grid)
    N = grid.N
    i, j = np.tril_indices(N + 1)
    x11 = np.zeros((N + 1, N + 1), dtype=complex)
    x11[i, j] = u[j] / u[i]
    y = np.zeros_like(x11)
    vdiag = v[np.arange(N + 1), np.arange(N + 1)]
    y[i, j] = np.conj(u[i - j]) - 2.0 * (u[j] / u[i] * vdiag[i] - v[i, j])
    return {
        "x11bar": TwoVarTable(grid, x11, "x11bar"),
        "x21bar": OneVarTable(grid, np.conj(u), "x21bar"),
        "ybar": TwoVarTable(grid, y, "ybar"),
    }


def assemble_B(kernel: ResponseKernel, omega0: float, tables: dict, grid: TimeGrid):
    """B1..B3 from the Green's-function tables (same quadrature as the A route)."""
    from .assemble import CoeffSeries, _cavity_coefficients

    _check_grid(kernel.grid, grid)
    B1, B2, B3 = _cavity_coefficients(
        kernel, omega0, grid, tables["x11bar"].values, tables["x21bar"].values, tables["ybar"].values
    )
    return CoeffSeries(grid, "oracle", {"B1": B1, "B2": B2, "B3": B3})
