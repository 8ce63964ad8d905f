"""Monte Carlo unraveling of the stochastic Liouville equation.

With ``hbar = 1`` each random density matrix obeys (Ito)::

    i drho = [H_s + g1 f1 + g2 f2, rho] dt
             + 1/2 sum_k [f_k, rho] dW1k + i/2 sum_k {f_k, rho} dW2k*

with ``dW1k = (nu1k + i nu4k) dt``, ``dW2k = (nu2k + i nu3k) dt`` and the
bath-induced fields

    g1(t) =  i/2 int_0^t [alpha1(t-s)(nu22 + i nu32) - alpha2(t-s)(i nu12 + nu42)](s) ds
    g2(t) = -i/2 int_0^t [alpha1*(t-s)(nu21 + i nu31) + alpha2*(t-s)(i nu11 + nu41)](s) ds

The noise part is applied in its equivalent left/right form
``1/2 (eta11* f1 rho + eta12* f2 rho + eta21* rho f1 + eta22* rho f2)``,
which lets the two channels that do not affect the vacuum two-state
average (eta12*, eta21*) be switched off.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._accel import HAS_NUMBA, njit
from .coefffuncs import _check_grid
from .dynamics import CAVITY_KINDS, Scenario, destroy
from .errors import ConfigError, EnsembleError, GridMismatchError
from .kernels import ResponseKernel, TimeGrid

log = logging.getLogger(__name__)

CHUNK = 250
OVERFLOW = 1e100
MAX_EXCLUDED = 0.01


@dataclass(frozen=True)
class NoisePath:
    """White noises ``nu[n-1, k-1, j]``, each ~ Normal(0, 1/h)."""

    grid: TimeGrid
    nu: np.ndarray

    def __post_init__(self):
        if self.nu.shape[-3:] != (4, 2, self.grid.N):
            raise GridMismatchError(f"noise needs shape (..., 4, 2, {self.grid.N}), got {self.nu.shape}")

    @classmethod
    def draw(cls, grid: TimeGrid, rng: np.random.Generator) -> "NoisePath":
        return cls(grid, rng.standard_normal((4, 2, grid.N)) / np.sqrt(grid.h))


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for trajectory ``index``; never depends on scheduling."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def _filter_matrix(a: np.ndarray, h: float, N: int) -> np.ndarray:
    """``T[j, j'] = h a(t_j - t_j')`` for ``j' < j`` (left-point rule)."""
    idx = np.arange(N + 1)
    lag = idx[:, None] - idx[None, :N]
    return np.where(lag > 0, h * a[np.clip(lag, 0, None)], 0.0)


def _gbar_from_nu(kernel: ResponseKernel, nu: np.ndarray, h: float, N: int):
    T1 = _filter_matrix(kernel.a1, h, N)
    T2 = _filter_matrix(kernel.a2, h, N)
    # nu[..., n-1, k-1, j]
    z1 = nu[..., 1, 1, :] + 1j * nu[..., 2, 1, :]
    z2 = 1j * nu[..., 0, 1, :] + nu[..., 3, 1, :]
    w1 = nu[..., 1, 0, :] + 1j * nu[..., 2, 0, :]
    w2 = 1j * nu[..., 0, 0, :] + nu[..., 3, 0, :]
    g1 = 0.5j * (z1 @ T1.T - z2 @ T2.T)
    g2 = -0.5j * (w1 @ np.conj(T1).T + w2 @ np.conj(T2).T)
    return g1, g2


def sample_gbar(kernel: ResponseKernel, noise: NoisePath, grid: TimeGrid):
    """Bath-induced fields ``(g1[j], g2[j])`` for j = 0..N."""
    _check_grid(kernel.grid, grid)
    _check_grid(noise.grid, grid)
    return _gbar_from_nu(kernel, noise.nu, grid.h, grid.N)


def _eta_conj(nu):
    """conj(eta11, eta12, eta21, eta22) from nu[..., n-1, k-1, j]."""
    n1k1, n2k1, n3k1, n4k1 = nu[..., 0, 0, :], nu[..., 1, 0, :], nu[..., 2, 0, :], nu[..., 3, 0, :]
    n1k2, n2k2, n3k2, n4k2 = nu[..., 0, 1, :], nu[..., 1, 1, :], nu[..., 2, 1, :], nu[..., 3, 1, :]
    e11 = n2k1 - 1j * n3k1 - 1j * n1k1 + n4k1
    e12 = n2k2 - 1j * n3k2 - 1j * n1k2 + n4k2
    e21 = n2k1 - 1j * n3k1 + 1j * n1k1 - n4k1
    e22 = n2k2 - 1j * n3k2 + 1j * n1k2 - n4k2
    return np.stack([e11, e12, e21, e22], axis=-2)


def step_sde(kind: str, rho: np.ndarray, H: np.ndarray, ops, gbar, dnu, h: float, omit: bool = False) -> np.ndarray:
    """One Euler-Maruyama step.

    ``ops = (f1, f2)``, ``gbar = (g1, g2)`` at the current node, ``dnu`` the
    noise values ``nu[n-1, k-1]`` on the current step (shape (4, 2)).
    ``omit`` drops the eta12*/eta21* channels (vacuum two-state only).
    """
    if omit and kind in CAVITY_KINDS:
        raise ConfigError("channel omission is only valid for the zero-temperature two-state model")
    f1, f2 = ops
    g1, g2 = gbar
    e = _eta_conj(np.asarray(dnu, dtype=float)[..., None])[..., 0] * h
    e11, e12, e21, e22 = e
    if omit:
        e12 = e21 = 0.0
    X = H + g1 * f1 + g2 * f2
    out = rho - 1j * h * (X @ rho - rho @ X)
    out = out + 0.5 * (e11 * f1 @ rho + e12 * f2 @ rho + e21 * rho @ f1 + e22 * rho @ f2)
    return out


# --------------------------------------------------------------------------
# batched trajectory kernels
# --------------------------------------------------------------------------


def _run_batch_np(rho0, H, f1, f2, g1, g2, E, h, stride, P, Cop):
    B = g1.shape[0]
    N = E.shape[-1]
    nsamp = N // stride + 1
    rho = np.broadcast_to(rho0, (B,) + rho0.shape).copy()
    tr = np.empty((B, nsamp), dtype=complex)
    pop = np.empty((B, nsamp), dtype=complex)
    coh = np.empty((B, nsamp), dtype=complex)

    def sample(s):
        tr[:, s] = np.einsum("bii->b", rho)
        pop[:, s] = np.einsum("ij,bji->b", P, rho)
        coh[:, s] = np.einsum("ij,bji->b", Cop, rho)

    sample(0)
    for j in range(N):
        X = 1j * h * (H[None] + g1[:, j, None, None] * f1[None] + g2[:, j, None, None] * f2[None])
        e = 0.5 * h * E[:, :, j, None, None]
        L = -X + e[:, 0] * f1 + e[:, 1] * f2
        R = X + e[:, 2] * f1 + e[:, 3] * f2
        rho = rho + L @ rho + rho @ R
        if (j + 1) % stride == 0:
            sample((j + 1) // stride)
    return tr, pop, coh


@njit(cache=True)
def _sample_nb(rho, P, Cop):
    d = rho.shape[0]
    t0 = 0j
    p0 = 0j
    c0 = 0j
    for i in range(d):
        t0 += rho[i, i]
        for k in range(d):
            p0 += P[i, k] * rho[k, i]
            c0 += Cop[i, k] * rho[k, i]
    return t0, p0, c0


@njit(cache=True)
def _run_batch_nb(rho0, H, f1, f2, g1, g2, E, h, stride, P, Cop):
    # rho' = rho + L rho + rho R with L = -ihX + (e11 f1 + e12 f2)/2, R = ihX + (e21 f1 + e22 f2)/2
    B = g1.shape[0]
    N = E.shape[-1]
    d = rho0.shape[0]
    nsamp = N // stride + 1
    tr = np.empty((B, nsamp), dtype=np.complex128)
    pop = np.empty((B, nsamp), dtype=np.complex128)
    coh = np.empty((B, nsamp), dtype=np.complex128)
    L = np.empty((d, d), dtype=np.complex128)
    R = np.empty((d, d), dtype=np.complex128)
    rho = np.empty((d, d), dtype=np.complex128)
    new = np.empty((d, d), dtype=np.complex128)
    for b in range(B):
        rho[:, :] = rho0
        tr[b, 0], pop[b, 0], coh[b, 0] = _sample_nb(rho, P, Cop)
        for j in range(N):
            ga, gb = g1[b, j], g2[b, j]
            e11 = 0.5 * h * E[b, 0, j]
            e12 = 0.5 * h * E[b, 1, j]
            e21 = 0.5 * h * E[b, 2, j]
            e22 = 0.5 * h * E[b, 3, j]
            for i in range(d):
                for k in range(d):
                    x = 1j * h * (H[i, k] + ga * f1[i, k] + gb * f2[i, k])
                    L[i, k] = -x + e11 * f1[i, k] + e12 * f2[i, k]
                    R[i, k] = x + e21 * f1[i, k] + e22 * f2[i, k]
            for i in range(d):
                for k in range(d):
                    acc = rho[i, k]
                    for l in range(d):
                        acc += L[i, l] * rho[l, k] + rho[i, l] * R[l, k]
                    new[i, k] = acc
            rho[:, :] = new
            if (j + 1) % stride == 0:
                s = (j + 1) // stride
                tr[b, s], pop[b, s], coh[b, s] = _sample_nb(rho, P, Cop)
    return tr, pop, coh


run_batch = _run_batch_nb if HAS_NUMBA else _run_batch_np


# --------------------------------------------------------------------------
# ensemble
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleResult:
    times: np.ndarray
    mean: dict
    stderr: dict
    n_traj: int
    n_used: int
    seed: int

    @property
    def n_excluded(self) -> int:
        return self.n_traj - self.n_used


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value wins, then ``NMQO_THREADS``, then the CPU count."""
    if threads is None or threads == 0:
        env = os.environ.get("NMQO_THREADS", "").strip()
        threads = int(env) if env else 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def _chunk(kernel, scenario, grid, seed, start, stop, omit, stride):
    h, N = grid.h, grid.N
    nu = np.stack([trajectory_rng(seed, idx).standard_normal((4, 2, N)) for idx in range(start, stop)])
    nu /= np.sqrt(h)
    g1, g2 = _gbar_from_nu(kernel, nu, h, N)
    E = _eta_conj(nu)
    if omit:
        E[:, 1] = 0.0
        E[:, 2] = 0.0
    f1, f2 = scenario.operators()
    H = scenario.hamiltonian()
    if scenario.kind == "two-state":
        P = np.diag([1.0, 0.0]).astype(complex)
        Cop = np.array([[0, 0], [1, 0]], dtype=complex)  # tr(Cop rho) = rho_eg
    else:
        a = destroy(scenario.n_max)
        P = a.conj().T @ a
        Cop = a
    rho0 = scenario.initial_state()
    return run_batch(rho0, H, f1, f2, np.ascontiguousarray(g1), np.ascontiguousarray(g2),
                     np.ascontiguousarray(E), h, stride, P, Cop)


def run_ensemble(scenario: Scenario, kernel: ResponseKernel, grid: TimeGrid, n_traj: int, seed: int,
                 threads: int | None = None, omit_channels: bool = False) -> EnsembleResult:
    """Average ``n_traj`` trajectories; samples every 2h like ``propagate``."""
    _check_grid(kernel.grid, grid)
    if n_traj < 100:
        raise ConfigError("run_ensemble needs n_traj >= 100")
    if scenario.kind == "driven-cavity":
        raise ConfigError("the unraveling covers the undriven cavity and the two-state atom")
    if omit_channels and not (scenario.kind == "two-state" and kernel.zero_temperature):
        raise ConfigError("channel omission is only valid for the zero-temperature two-state model")
    stride = 2
    nsamp = grid.N // stride + 1
    tr = np.empty((n_traj, nsamp), dtype=complex)
    pop = np.empty_like(tr)
    coh = np.empty_like(tr)
    bounds = [(s, min(s + CHUNK, n_traj)) for s in range(0, n_traj, CHUNK)]

    def work(b):
        start, stop = b
        t, p, c = _chunk(kernel, scenario, grid, seed, start, stop, omit_channels, stride)
        tr[start:stop], pop[start:stop], coh[start:stop] = t, p, c

    nthreads = min(resolve_threads(threads), len(bounds))
    if nthreads <= 1:
        for b in bounds:
            work(b)
    else:
        with ThreadPoolExecutor(nthreads) as pool:
            list(pool.map(work, bounds))

    with np.errstate(invalid="ignore", over="ignore"):
        ok = np.all(np.isfinite(tr) & np.isfinite(pop) & np.isfinite(coh), axis=1)
        ok &= np.all((np.abs(tr) < OVERFLOW) & (np.abs(pop) < OVERFLOW) & (np.abs(coh) < OVERFLOW), axis=1)
    n_used = int(ok.sum())
    if n_traj - n_used > MAX_EXCLUDED * n_traj:
        raise EnsembleError(
            f"unravel: {n_traj - n_used} of {n_traj} trajectories overflowed (budget {MAX_EXCLUDED:.0%})"
        )
    if n_used < n_traj:
        log.warning("unravel: excluded %d overflowing trajectories", n_traj - n_used)
    data = {
        "trace": tr[ok].real,
        "n_or_pe": pop[ok].real,
        "re_coh": coh[ok].real,
        "im_coh": coh[ok].imag,
    }
    mean = {k: np.mean(v, axis=0) for k, v in data.items()}
    se = {k: np.std(v, axis=0, ddof=1) / np.sqrt(n_used) for k, v in data.items()}
    return EnsembleResult(grid.times[::stride], mean, se, n_traj, n_used, int(seed))
