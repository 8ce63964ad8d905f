"""Coefficient functions from the time-nonlocal integral equations.

Every equation has the shape, for a fixed outer time ``t = t_i``::

    f(t') = g(t') + int_{t'}^{t} dt1 e^{-i s w0 (t1 - t')} int_0^{t1} dt2 a(t1 - t2) f(t2)

(``s = +1`` for the cavity functions, ``s = -1`` for the two-state
function), discretised with composite trapezoid weights on the grid.
For each row ``i`` this is a dense ``(i+1) x (i+1)`` linear system.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import scipy.linalg as sla

from ._kernels import x21_march
from .errors import ConfigError, GridMismatchError, SolverError
from .kernels import ResponseKernel, TimeGrid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverPolicy:
    method: Literal["dense", "picard"] = "dense"
    picard_tol: float = 1e-10
    picard_max_iter: int = 200
    relaxation: float = 1.0

    def __post_init__(self):
        if self.method not in ("dense", "picard"):
            raise ConfigError(f"unknown solver method {self.method!r} (use 'dense' or 'picard')")
        if not self.picard_tol > 0:
            raise ConfigError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ConfigError("picard_max_iter must be >= 1")
        if not 0 < self.relaxation <= 1:
            raise ConfigError("relaxation must lie in (0, 1]")


DEFAULT_POLICY = SolverPolicy()


class TwoVarTable:
    """Lower-triangular table ``f(t_i, t_j)``, ``0 <= j <= i <= N``.

    Entries above the diagonal are stored as zero and may not be read
    through ``__call__``.
    """

    def __init__(self, grid: TimeGrid, values: np.ndarray, name: str = ""):
        values = np.asarray(values, dtype=complex)
        n = grid.N + 1
        if values.shape != (n, n):
            raise GridMismatchError(f"table {name!r} has shape {values.shape}, grid expects {(n, n)}")
        self.grid = grid
        self.values = np.tril(values)
        self.values.setflags(write=False)
        self.name = name

    def __call__(self, i: int, j: int) -> complex:
        if not 0 <= j <= i <= self.grid.N:
            raise IndexError(f"{self.name or 'table'}({i}, {j}) is outside the stored triangle j <= i")
        return complex(self.values[i, j])

    def row(self, i: int) -> np.ndarray:
        return self.values[i, : i + 1]

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values).copy()

    def conj(self) -> "TwoVarTable":
        return TwoVarTable(self.grid, np.conj(self.values), self.name + "*")

    def __add__(self, other: "TwoVarTable") -> "TwoVarTable":
        _check_grid(self.grid, other.grid)
        return TwoVarTable(self.grid, self.values + other.values)

    def max_abs_diff(self, other: "TwoVarTable") -> float:
        _check_grid(self.grid, other.grid)
        return float(np.max(np.abs(self.values - other.values)))

    def __repr__(self):
        return f"TwoVarTable({self.name!r}, N={self.grid.N}, h={self.grid.h:g})"


@dataclass(frozen=True)
class OneVarTable:
    """``g(s_k)`` with ``s_k = k h``."""

    grid: TimeGrid
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.N + 1,):
            raise GridMismatchError(f"table {self.name!r} needs N+1 samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, k: int) -> complex:
        return complex(self.values[k])


def _check_grid(a: TimeGrid, b: TimeGrid):
    if not a.same_as(b):
        raise GridMismatchError(f"grid mismatch: (h={a.h}, N={a.N}) vs (h={b.h}, N={b.N})")


def _check_inputs(kernel: ResponseKernel, grid: TimeGrid):
    _check_grid(kernel.grid, grid)
    if grid.N < 4:
        raise ConfigError("coefficient-function solvers need N >= 4")


# --------------------------------------------------------------------------
# discretised operators
# --------------------------------------------------------------------------


def memory_matrix(a: np.ndarray, h: float) -> np.ndarray:
    """``G[m, l]`` such that ``(G f)_m ~ int_0^{t_m} a(t_m - t2) f(t2) dt2``."""
    n = a.size
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    G = np.where(diff >= 0, a[np.clip(diff, 0, None)], 0.0).astype(complex)
    G[:, 0] *= 0.5
    G[idx, idx] *= 0.5
    G[0, 0] = 0.0
    return h * G


def _outer(z: np.ndarray, phase: np.ndarray, h: float) -> np.ndarray:
    """``(O z)_j = h * trap_{m=j..i} phase_m/phase_j * z_m`` along axis 0.

    ``z`` has i+1 rows; row i of the result is zero (empty interval).
    """
    y = phase[:, None] * z if z.ndim == 2 else phase * z
    S = np.flip(np.cumsum(np.flip(y, axis=0), axis=0), axis=0)
    out = S - 0.5 * y - 0.5 * y[-1]
    out *= h
    return (np.conj(phase)[:, None] * out) if z.ndim == 2 else np.conj(phase) * out


def _solve_row(K: np.ndarray, g: np.ndarray, policy: SolverPolicy, i: int, t: float) -> np.ndarray:
    if policy.method == "dense":
        A = np.eye(K.shape[0], dtype=complex) - K
        lu, piv = sla.lu_factor(A, check_finite=False)
        d = np.abs(np.diagonal(lu))
        if not np.all(np.isfinite(d)) or d.min() <= 1e-14 * max(d.max(), 1.0):
            raise SolverError(f"coefffuncs: singular collocation system at t={t:g} (row {i})", {"row": i})
        return sla.lu_solve((lu, piv), g, check_finite=False)
    return _picard(K, g, policy, i, t)


def _picard(K, g, policy: SolverPolicy, i, t):
    f = g.copy()
    r = policy.relaxation
    prev = np.inf
    growth = 0
    history = []
    for it in range(1, policy.picard_max_iter + 1):
        new = g + K @ f
        if r != 1.0:
            new = (1 - r) * f + r * new
        delta = float(np.max(np.abs(new - f))) if f.size else 0.0
        history.append(delta)
        f = new
        if not np.isfinite(delta):
            growth = 10
        if delta <= policy.picard_tol:
            return f
        growth = growth + 1 if delta > prev else 0
        prev = delta
        if growth >= 10:
            raise SolverError(
                f"coefffuncs: picard iteration diverges at t={t:g} (row {i}, iteration {it}, "
                f"update {delta:.3e}); use method='dense'",
                {"row": i, "iterations": it, "updates": history[-12:]},
            )
    raise SolverError(
        f"coefffuncs: picard did not reach tol {policy.picard_tol:g} in {policy.picard_max_iter} iterations "
        f"at t={t:g} (last update {history[-1]:.3e})",
        {"row": i, "iterations": policy.picard_max_iter, "updates": history[-12:]},
    )


def _row_solver(a: np.ndarray, omega0: float, grid: TimeGrid, sign: int, sources: Callable, n_rhs: int,
                policy: SolverPolicy):
    """Solve the family of row systems for every outer index i.

    ``sources(i, phase)`` returns the right-hand sides for row i, shape
    ``(i+1,)`` or ``(i+1, n_rhs)``.
    """
    h, N = grid.h, grid.N
    G = memory_matrix(a, h)
    phase_all = np.exp(-1j * sign * omega0 * h * np.arange(N + 1))
    out = np.zeros((n_rhs, N + 1, N + 1), dtype=complex)
    for i in range(N + 1):
        phase = phase_all[: i + 1]
        K = _outer(G[: i + 1, : i + 1], phase, h)
        g = sources(i, phase)
        f = _solve_row(K, g, policy, i, i * h)
        if f.ndim == 1:
            f = f[:, None]
        out[:, i, : i + 1] = f.T
    return out


# --------------------------------------------------------------------------
# cavity functions
# --------------------------------------------------------------------------


def solve_cavity(kernel: ResponseKernel, omega0: float, grid: TimeGrid, policy: SolverPolicy = DEFAULT_POLICY,
                 x21: OneVarTable | None = None, drive: np.ndarray | Callable | None = None) -> dict:
    """x11 and, when requested, x12 (needs ``x21``) and x13 (needs ``drive``).

    All requested functions share one factorisation per row.
    """
    _check_inputs(kernel, grid)
    h, N = grid.h, grid.N
    names = ["x11"]
    src_x12 = src_x13 = None
    if x21 is not None:
        _check_grid(x21.grid, grid)
        names.append("x12")
        # Q_m = int_0^t alpha2(t_m - t2) x21(t - t2) dt2, full range => negative lags
        A2 = sla.toeplitz(kernel.a2, np.conj(kernel.a2))
        x21v = x21.values

        def src_x12(i, phase):
            w = np.full(i + 1, h)
            w[0] = w[-1] = 0.5 * h
            if i == 0:
                w[:] = 0.0
            Q = A2[: i + 1, : i + 1] @ (w * x21v[i::-1])
            return -_outer(Q, phase, h)

    if drive is not None:
        eps = drive_samples(drive, grid)
        names.append("x13")

        def src_x13(i, phase):
            return _outer(-2j * eps[: i + 1].astype(complex), phase, h)

    times = grid.times

    def sources(i, phase):
        cols = [np.exp(-1j * omega0 * (times[i] - times[: i + 1]))]
        if src_x12 is not None:
            cols.append(src_x12(i, phase))
        if src_x13 is not None:
            cols.append(src_x13(i, phase))
        return np.stack(cols, axis=1)

    out = _row_solver(kernel.a1, omega0, grid, +1, sources, len(names), policy)
    return {name: TwoVarTable(grid, out[k], name) for k, name in enumerate(names)}


def solve_x11(kernel: ResponseKernel, omega0: float, grid: TimeGrid, policy: SolverPolicy = DEFAULT_POLICY) -> TwoVarTable:
    return solve_cavity(kernel, omega0, grid, policy)["x11"]


def solve_x12(kernel: ResponseKernel, omega0: float, grid: TimeGrid, x21: OneVarTable,
              policy: SolverPolicy = DEFAULT_POLICY) -> TwoVarTable:
    return solve_cavity(kernel, omega0, grid, policy, x21=x21)["x12"]


def solve_x13(kernel: ResponseKernel, omega0: float, drive, grid: TimeGrid,
              policy: SolverPolicy = DEFAULT_POLICY) -> TwoVarTable:
    return solve_cavity(kernel, omega0, grid, policy, drive=drive)["x13"]


def compute_y(x11: TwoVarTable, x12: TwoVarTable) -> TwoVarTable:
    _check_grid(x11.grid, x12.grid)
    return TwoVarTable(x11.grid, x11.values + x12.values, "y")


def drive_samples(drive, grid: TimeGrid) -> np.ndarray:
    """Drive amplitude on the grid nodes, from an array or a callable."""
    if callable(drive):
        eps = np.array([float(drive(t)) for t in grid.times])
    else:
        eps = np.asarray(drive, dtype=float)
    if eps.shape != (grid.N + 1,):
        raise GridMismatchError(f"drive needs N+1={grid.N + 1} samples, got {eps.shape}")
    if not np.all(np.isfinite(eps)):
        raise ConfigError("drive samples must be finite")
    return eps


# --------------------------------------------------------------------------
# x21: translation-invariant form
# --------------------------------------------------------------------------


def solve_x21(kernel: ResponseKernel, omega0: float, grid: TimeGrid, policy: SolverPolicy = DEFAULT_POLICY) -> OneVarTable:
    """x21(s) on ``s_k = k h`` by marching the reduced one-variable equation.

    The trapezoid product rule makes the equation lower-triangular in k,
    so the only implicit term is the corner weight ``h^2/4 * a*(0)``; the
    march is exact for the discrete equation and ``policy`` is accepted
    for interface symmetry only.
    """
    _check_inputs(kernel, grid)
    h, N = grid.h, grid.N
    ac = np.conj(kernel.a1)
    phi = np.exp(-1j * omega0 * h * np.arange(N + 1))
    # P_l = h * trap_{m=0..l} phi_m a*(t_l - t_m)
    conv = np.convolve(phi, ac)[: N + 1]
    P = h * (conv - 0.5 * phi[0] * ac - 0.5 * phi * ac[0])
    P[0] = 0.0
    diag = 1.0 + 0.25 * h * h * ac[0]
    if abs(diag) < 1e-14:
        raise SolverError("coefffuncs: singular x21 recursion")
    x = x21_march(phi, P, ac[0], h, diag)
    return OneVarTable(grid, x, "x21")


def solve_x21_2d(kernel: ResponseKernel, omega0: float, grid: TimeGrid) -> TwoVarTable:
    """Full two-variable x21(t, t') by dense collocation (verification only)."""
    _check_inputs(kernel, grid)
    h, N = grid.h, grid.N
    ac = np.conj(kernel.a1)
    times = grid.times
    phase_all = np.exp(-1j * omega0 * h * np.arange(N + 1))
    out = np.zeros((N + 1, N + 1), dtype=complex)
    idx = np.arange(N + 1)
    lag = idx[None, :] - idx[:, None]
    upper = np.where(lag >= 0, ac[np.clip(lag, 0, None)], 0.0)
    for i in range(N + 1):
        # H_m = int_{t_m}^{t_i} a*(t2 - t_m) f(t2) dt2
        H = upper[: i + 1, : i + 1].copy()
        H[np.arange(i + 1), np.arange(i + 1)] *= 0.5
        H[:, i] *= 0.5
        H[i, i] = 0.0
        H *= h
        K = -_outer(H, phase_all[: i + 1], h)
        g = np.exp(-1j * omega0 * (times[i] - times[: i + 1]))
        out[i, : i + 1] = _solve_row(K, g, DEFAULT_POLICY, i, times[i])
    return TwoVarTable(grid, out, "x21_2d")


def verify_x21_translation_invariance(kernel: ResponseKernel, omega0: float, grid: TimeGrid,
                                      policy: SolverPolicy = DEFAULT_POLICY) -> float:
    """max |x21(t_i, t_j) - x21(t_i - t_j)| between the 2D and 1D solves."""
    if grid.N > 100:
        raise ConfigError("translation-invariance check is meant for small grids (N <= 100)")
    one = solve_x21(kernel, omega0, grid, policy).values
    two = solve_x21_2d(kernel, omega0, grid).values
    N = grid.N
    i, j = np.tril_indices(N + 1)
    return float(np.max(np.abs(two[i, j] - one[i - j])))


# --------------------------------------------------------------------------
# two-state atom
# --------------------------------------------------------------------------


def solve_x_tsa(kernel: ResponseKernel, omega0: float, grid: TimeGrid, policy: SolverPolicy = DEFAULT_POLICY) -> TwoVarTable:
    """Two-state coefficient function, with the exponents exactly as printed:

    x(t,t') = e^{-i w0 (t'-t)} + int_{t'}^t dt1 int_0^{t1} dt2 e^{-i w0 (t'-t1)} alpha(t1-t2) x(t,t2)
    """
    _check_inputs(kernel, grid)
    if not kernel.zero_temperature:
        raise ConfigError("the two-state coefficient function needs a zero-temperature kernel (alpha2 == alpha1)")
    times = grid.times

    def sources(i, phase):
        return np.exp(-1j * omega0 * (times[: i + 1] - times[i]))

    out = _row_solver(kernel.a1, omega0, grid, -1, sources, 1, policy)
    return TwoVarTable(grid, out[0], "x")
