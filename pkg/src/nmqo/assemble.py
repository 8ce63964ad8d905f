"""Master-equation coefficient series from coefficient-function tables."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefffuncs import OneVarTable, TwoVarTable, _check_grid, drive_samples
from .errors import ConfigError
from .kernels import ResponseKernel, TimeGrid

KINDS = {
    "cavity": ("A1", "A2", "A3"),
    "oracle": ("B1", "B2", "B3"),
    "driven-extra": ("C", "D"),
    "two-state": ("R", "S"),
}
_COMPLEX = {"C", "D"}


@dataclass(frozen=True)
class CoeffSeries:
    """One sample per grid node for each coefficient of ``kind``."""

    grid: TimeGrid
    kind: str
    data: dict

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown coefficient kind {self.kind!r}")
        clean = {}
        for name in KINDS[self.kind]:
            arr = np.asarray(self.data[name])
            if name in _COMPLEX:
                arr = arr.astype(complex)
            else:
                if np.iscomplexobj(arr):
                    raise TypeError(f"{name} must be real")
                arr = arr.astype(float)
            if arr.shape != (self.grid.N + 1,):
                raise ConfigError(f"{name} needs N+1 samples")
            arr.setflags(write=False)
            clean[name] = arr
        object.__setattr__(self, "data", clean)

    def __getitem__(self, name):
        return self.data[name]

    def at(self, k: int) -> dict:
        return {name: arr[k] for name, arr in self.data.items()}

    @property
    def names(self):
        return KINDS[self.kind]


def _trap_weights(grid: TimeGrid) -> np.ndarray:
    """``W[i, j]``: trapezoid weights of int_0^{t_i} on nodes j <= i."""
    N, h = grid.N, grid.h
    W = np.tril(np.full((N + 1, N + 1), h))
    W[:, 0] *= 0.5
    idx = np.arange(N + 1)
    W[idx, idx] *= 0.5
    W[0, 0] = 0.0
    return W


def _lags(N: int):
    idx = np.arange(N + 1)
    return np.clip(idx[:, None] - idx[None, :], 0, None)


def _cavity_coefficients(kernel, omega0, grid, X11, X21, Y):
    """Shared quadrature for both routes.

    ``X11``, ``Y`` are (N+1)^2 tables and ``X21`` a 1D table, all already
    in the conjugated form that enters the integrands.
    """
    W = _trap_weights(grid)
    L = _lags(grid.N)
    a1c = np.conj(kernel.a1)[L]
    a2c = np.conj(kernel.a2)[L]
    X21 = np.asarray(X21)
    I1 = np.sum(W * a1c * X11, axis=1)
    I2 = np.sum(W * a2c * X21[L], axis=1)
    I3 = np.sum(W * a1c * Y, axis=1)
    return omega0 + I1.imag, I1.real.copy(), I2.real - I3.real


def assemble_A(kernel: ResponseKernel, omega0: float, x11: TwoVarTable, x21: OneVarTable, y: TwoVarTable,
               grid: TimeGrid) -> CoeffSeries:
    """A1 (frequency), A2 (dissipation), A3 (fluctuation) of the cavity equation."""
    for obj in (kernel, x11, x21, y):
        _check_grid(obj.grid, grid)
    A1, A2, A3 = _cavity_coefficients(
        kernel, omega0, grid, np.conj(x11.values), np.conj(x21.values), np.conj(y.values)
    )
    return CoeffSeries(grid, "cavity", {"A1": A1, "A2": A2, "A3": A3})


def assemble_CD(kernel: ResponseKernel, x13: TwoVarTable, drive, grid: TimeGrid) -> CoeffSeries:
    _check_grid(kernel.grid, grid)
    _check_grid(x13.grid, grid)
    eps = drive_samples(drive, grid)
    W = _trap_weights(grid)
    L = _lags(grid.N)
    a1 = kernel.a1[L]
    x = x13.values
    C = -1j * eps + 0.5 * np.sum(W * a1 * x, axis=1)
    D = -1j * eps - 0.5 * np.sum(W * np.conj(a1) * np.conj(x), axis=1)
    return CoeffSeries(grid, "driven-extra", {"C": C, "D": D})


def assemble_RS(kernel: ResponseKernel, x_tsa: TwoVarTable, grid: TimeGrid) -> CoeffSeries:
    """Decay rate R and frequency shift S of the two-state equation."""
    _check_grid(kernel.grid, grid)
    _check_grid(x_tsa.grid, grid)
    if not kernel.zero_temperature:
        raise ConfigError("two-state coefficients need a zero-temperature kernel")
    W = _trap_weights(grid)
    L = _lags(grid.N)
    I = np.sum(W * np.conj(kernel.a1)[L] * np.conj(x_tsa.values), axis=1)
    return CoeffSeries(grid, "two-state", {"R": 2.0 * I.real, "S": 2.0 * I.imag})


def zero_drive_extra(grid: TimeGrid) -> CoeffSeries:
    z = np.zeros(grid.N + 1, dtype=complex)
    return CoeffSeries(grid, "driven-extra", {"C": z, "D": z})
