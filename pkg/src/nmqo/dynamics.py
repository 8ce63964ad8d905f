"""Time-local master equations and their propagation.

Three generators, ``hbar = 1``:

cavity / driven cavity::

    drho/dt = [-i A1 a^+a + C a + D a^+, rho]
              + A2 (2 a rho a^+ - a^+a rho - rho a^+a)
              + A3 (a^+ rho a + a rho a^+ - a^+a rho - rho a a^+)

two-state atom, ``H_s = -w0 sz / 2``::

    drho/dt = -i [H_s, rho] - i S/2 [s+s-, rho]
              + R (s- rho s+ - 1/2 s+s- rho - 1/2 rho s+s-)

The two-state basis is ordered (|e>, |g>).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .assemble import CoeffSeries, zero_drive_extra
from .errors import ConfigError, GridMismatchError, StepSizeError, TruncationError
from .kernels import TimeGrid

TRUNCATION_TOL = 1e-6
TRACE_TOL = 1e-6

CAVITY_KINDS = ("cavity", "driven-cavity")
KINDS = ("cavity", "driven-cavity", "two-state")


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------


def destroy(n_max: int) -> np.ndarray:
    """Annihilation operator on Fock levels 0..n_max."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)


SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


@dataclass(frozen=True)
class Drive:
    """External field eps(t): constant, sinusoid or tabulated."""

    kind: str = "constant"
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    times: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "tabulated"):
            raise ConfigError(f"unknown drive kind {self.kind!r}")
        if self.kind == "tabulated":
            t = np.asarray(self.times, dtype=float)
            if t.size < 2 or t.size != len(self.values) or np.any(np.diff(t) <= 0):
                raise ConfigError("tabulated drive needs >= 2 ascending times with matching values")

    def __call__(self, t):
        if self.kind == "constant":
            return self.amplitude + 0.0 * np.asarray(t, dtype=float)
        if self.kind == "sinusoid":
            return self.amplitude * np.cos(self.omega * np.asarray(t, dtype=float) + self.phase)
        return np.interp(t, self.times, self.values)

    def samples(self, grid: TimeGrid) -> np.ndarray:
        return np.asarray(self(grid.times), dtype=float)


@dataclass(frozen=True)
class Scenario:
    kind: str
    omega0: float
    model: Any = None
    beta: float = math.inf
    n_max: int = 10
    initial: tuple = ("fock", 0)
    drive: Drive | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise ConfigError("omega0 must be positive")
        if self.kind in CAVITY_KINDS:
            if self.n_max < 2:
                raise ConfigError("cavity scenarios need n_max >= 2")
            if self.initial[0] == "coherent" and abs(complex(self.initial[1])) ** 2 > self.n_max / 4:
                raise ConfigError("coherent amplitude too large for the Fock truncation (|alpha|^2 <= n_max/4)")
            if self.initial[0] not in ("fock", "coherent"):
                raise ConfigError(f"initial state {self.initial[0]!r} is not a cavity state")
            if self.initial[0] == "fock" and not 0 <= int(self.initial[1]) <= self.n_max:
                raise ConfigError("Fock initial state outside truncation")
        else:
            if self.initial[0] not in ("excited", "ground", "bloch"):
                raise ConfigError(f"initial state {self.initial[0]!r} is not a two-state state")
        if self.kind == "driven-cavity" and self.drive is None:
            object.__setattr__(self, "drive", Drive())

    @property
    def dim(self) -> int:
        return 2 if self.kind == "two-state" else self.n_max + 1

    def operators(self):
        """(f1, f2): the system operators coupled to the bath."""
        if self.kind == "two-state":
            return SIGMA_MINUS, SIGMA_PLUS
        a = destroy(self.n_max)
        return a, a.conj().T.copy()

    def hamiltonian(self, eps: float = 0.0) -> np.ndarray:
        if self.kind == "two-state":
            return -0.5 * self.omega0 * SIGMA_Z
        a = destroy(self.n_max)
        ad = a.conj().T
        H = self.omega0 * ad @ a
        if eps:
            H = H + eps * (a + ad)
        return H

    def initial_state(self) -> np.ndarray:
        return initial_state(self.initial, self.dim)


def initial_state(spec: tuple, dim: int) -> np.ndarray:
    name = spec[0]
    psi = np.zeros(dim, dtype=complex)
    if name == "fock":
        psi[int(spec[1])] = 1.0
    elif name == "coherent":
        alpha = complex(spec[1])
        n = np.arange(dim)
        logfact = np.array([math.lgamma(k + 1) for k in n])
        mag = np.exp(-0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * logfact) if alpha != 0 else (n == 0) * 1.0
        psi = mag * np.exp(1j * n * np.angle(alpha))
        psi = psi / np.linalg.norm(psi)
    elif name == "excited":
        psi[0] = 1.0
    elif name == "ground":
        psi[1] = 1.0
    elif name == "bloch":
        theta, phi = float(spec[1]), float(spec[2])
        psi[0] = math.cos(theta / 2)
        psi[1] = np.exp(1j * phi) * math.sin(theta / 2)
    else:
        raise ConfigError(f"unknown initial state {name!r}")
    return np.outer(psi, psi.conj())


# --------------------------------------------------------------------------
# generator
# --------------------------------------------------------------------------


class _Ops:
    """Cached operator products for one kind and dimension."""

    def __init__(self, kind: str, dim: int, omega0: float = 1.0):
        self.kind = kind
        self.omega0 = omega0
        if kind == "two-state":
            self.H = -0.5 * omega0 * SIGMA_Z
            self.P = SIGMA_PLUS @ SIGMA_MINUS
            self.sm, self.sp = SIGMA_MINUS, SIGMA_PLUS
        else:
            a = destroy(dim - 1)
            ad = a.conj().T.copy()
            self.a, self.ad = a, ad
            self.n = ad @ a
            self.aad = a @ ad

    @classmethod
    def of(cls, scenario: Scenario) -> "_Ops":
        return cls(scenario.kind, scenario.dim, scenario.omega0)


def liouville_apply(kind: str, coeffs: dict, rho: np.ndarray, omega0: float | None = None,
                    ops: _Ops | None = None) -> np.ndarray:
    """Right-hand side of the selected master equation at one node.

    ``coeffs`` holds A1, A2, A3 (plus C, D for the driven cavity) or R, S.
    The two-state kind also needs the bare frequency ``omega0``.
    """
    rho = np.asarray(rho, dtype=complex)
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}")
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise GridMismatchError("density matrix must be square")
    if ops is None:
        if kind == "two-state" and omega0 is None:
            raise ConfigError("two-state generator needs omega0")
        ops = _Ops(kind, rho.shape[0], 1.0 if omega0 is None else omega0)
    if kind == "two-state":
        if rho.shape != (2, 2):
            raise GridMismatchError(f"two-state density matrix must be 2x2, got {rho.shape}")
        R, S = coeffs["R"], coeffs["S"]
        H, P = ops.H, ops.P
        Prho, rhoP = P @ rho, rho @ P
        out = -1j * (H @ rho - rho @ H) - 0.5j * S * (Prho - rhoP)
        out += R * (ops.sm @ rho @ ops.sp - 0.5 * Prho - 0.5 * rhoP)
        return out
    a, ad, n = ops.a, ops.ad, ops.n
    if rho.shape != n.shape:
        raise GridMismatchError(f"density matrix {rho.shape} does not match Fock truncation {n.shape}")
    A1, A2, A3 = coeffs["A1"], coeffs["A2"], coeffs["A3"]
    X = -1j * A1 * n
    C, D = coeffs.get("C", 0.0), coeffs.get("D", 0.0)
    if C != 0 or D != 0:
        X = X + C * a + D * ad
    nrho, rhon = n @ rho, rho @ n
    out = X @ rho - rho @ X
    out += A2 * (2.0 * a @ rho @ ad - nrho - rhon)
    # -n rho - rho a a^dag written symmetrically: identical for the infinite mode,
    # and exactly trace- and Hermiticity-preserving after Fock truncation
    sym = ops.n + ops.aad
    out += A3 * (ad @ rho @ a + a @ rho @ ad - 0.5 * (sym @ rho + rho @ sym))
    return out


# --------------------------------------------------------------------------
# observables and propagation
# --------------------------------------------------------------------------

OBS_COLUMNS = ("trace", "purity", "n_or_pe", "re_coh", "im_coh")


def observables(rho: np.ndarray, kind: str) -> dict:
    rho = np.asarray(rho)
    tr = np.trace(rho)
    purity = np.real(np.trace(rho @ rho))
    if kind == "two-state":
        pop, coh = rho[0, 0].real, rho[0, 1]
    else:
        a = destroy(rho.shape[0] - 1)
        pop = np.real(np.trace(a.conj().T @ a @ rho))
        coh = np.trace(a @ rho)
    return {"trace": float(tr.real), "purity": float(purity), "n_or_pe": float(pop),
            "re_coh": float(np.real(coh)), "im_coh": float(np.imag(coh))}


@dataclass
class Trajectory:
    times: np.ndarray
    columns: dict
    snapshots: list | None = field(default=None, repr=False)
    max_trace_drift: float = 0.0
    max_hermiticity_defect: float = 0.0

    def __getitem__(self, name):
        return self.columns[name]


def _coeff_dict(kind, coeffs: CoeffSeries, extra: CoeffSeries | None, k: int, omega0: float):
    c = coeffs.at(k)
    if kind == "two-state":
        return {"R": c["R"], "S": c["S"]}
    if coeffs.kind == "oracle":
        c = {"A1": c["B1"], "A2": c["B2"], "A3": c["B3"]}
    if extra is not None:
        c.update(extra.at(k))
    return c


def propagate(scenario: Scenario, coeffs: CoeffSeries, grid: TimeGrid, extra: CoeffSeries | None = None,
              snapshots: bool = False, rho0: np.ndarray | None = None) -> Trajectory:
    """Classic RK4 with step 2h; stages read coefficients at nodes k, k+1, k+2."""
    kind = scenario.kind
    if not coeffs.grid.same_as(grid):
        raise GridMismatchError("coefficient series and propagation grid differ")
    if kind == "two-state" and coeffs.kind != "two-state":
        raise ConfigError("two-state propagation needs R/S coefficients")
    if kind in CAVITY_KINDS and coeffs.kind not in ("cavity", "oracle"):
        raise ConfigError("cavity propagation needs A (or B) coefficients")
    if kind in CAVITY_KINDS and extra is None:
        # the plain cavity is the driven path with C = D = 0
        extra = zero_drive_extra(grid)
    ops = _Ops.of(scenario)
    rho = scenario.initial_state() if rho0 is None else np.array(rho0, dtype=complex)
    if rho.shape != (scenario.dim, scenario.dim):
        raise GridMismatchError("initial state dimension does not match scenario")
    h2 = 2.0 * grid.h
    nsteps = grid.N // 2
    times = grid.times[::2]
    cols = {c: np.empty(nsteps + 1) for c in OBS_COLUMNS}
    snaps = [rho.copy()] if snapshots else None
    omega0 = scenario.omega0
    coeff_at = [_coeff_dict(kind, coeffs, extra, k, omega0) for k in range(grid.N + 1)]
    top = scenario.dim - 1
    max_drift = 0.0
    max_herm = 0.0

    def f(k, r):
        return liouville_apply(kind, coeff_at[k], r, ops=ops)

    def record(m, r):
        nonlocal max_drift, max_herm
        obs = observables(r, kind)
        for c in OBS_COLUMNS:
            cols[c][m] = obs[c]
        drift = abs(np.trace(r) - 1.0)
        max_drift = max(max_drift, drift)
        max_herm = max(max_herm, float(np.max(np.abs(r - r.conj().T))))
        t = times[m]
        if drift > TRACE_TOL:
            raise StepSizeError(f"dynamics: trace drifted by {drift:.2e} at t={t:g}; reduce the grid step")
        if kind in CAVITY_KINDS and abs(r[top, top]) > TRUNCATION_TOL:
            raise TruncationError(
                f"dynamics: top Fock level population {abs(r[top, top]):.2e} exceeds {TRUNCATION_TOL:g} "
                f"at t={t:g}; increase n_max",
                time=t,
                population=abs(r[top, top]),
            )

    record(0, rho)
    for m in range(nsteps):
        k = 2 * m
        k1 = f(k, rho)
        k2 = f(k + 1, rho + 0.5 * h2 * k1)
        k3 = f(k + 1, rho + 0.5 * h2 * k2)
        k4 = f(k + 2, rho + h2 * k3)
        rho = rho + (h2 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        record(m + 1, rho)
        if snapshots:
            snaps.append(rho.copy())
    return Trajectory(times, cols, snaps, max_drift, max_herm)
