"""Spectral densities and bath response kernels.

The kernels follow the ``e^{+i w t}`` convention::

    alpha1(t) = int_0^inf J(w) exp(i w t) dw
    alpha2(t) = int_0^inf J(w) coth(beta w / 2) exp(i w t) dw

with hbar = k_B = 1. ``beta = math.inf`` (``ZERO_TEMPERATURE``) selects the
vacuum, where the two kernels coincide.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import integrate, optimize

from .errors import ConfigError, QuadratureError

ZERO_TEMPERATURE = math.inf

QUAD_RTOL = 1e-10
_CUTOFF_REL = 1e-16


# --------------------------------------------------------------------------
# grid
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k h`` for ``k = 0..N``."""

    h: float
    N: int

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigError(f"grid step must be positive, got h={self.h}")
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError(f"grid needs N >= 2 steps, got N={self.N}")
        if self.N % 2:
            raise ConfigError(f"N must be even so that the 2h propagation step lands on nodes, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @classmethod
    def from_horizon(cls, T: float, N: int) -> "TimeGrid":
        return cls(T / N, N)

    @property
    def T(self) -> float:
        return self.N * self.h

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.N + 1)

    def same_as(self, other: "TimeGrid") -> bool:
        return self.N == other.N and math.isclose(self.h, other.h, rel_tol=1e-12)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.h / factor, self.N * factor)


# --------------------------------------------------------------------------
# spectral models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OhmicExp:
    """J(w) = eta * w * exp(-w / wc)."""

    eta: float
    wc: float

    def __post_init__(self):
        _positive(eta=self.eta, wc=self.wc)

    def J(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w >= 0, self.eta * w * np.exp(-w / self.wc), 0.0)

    def J_over_w(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w >= 0, self.eta * np.exp(-w / self.wc), 0.0)

    def support(self):
        # J(w)/max J = (w/wc) e^{1 - w/wc}
        thr = math.log(_CUTOFF_REL)
        f = lambda x: math.log(x) + 1.0 - x - thr  # noqa: E731
        x = optimize.brentq(f, 1.0, 200.0, xtol=1e-12)
        return 0.0, x * self.wc, ()


@dataclass(frozen=True)
class LorentzianExtended:
    """Kernel-defined model, ``alpha(t) = (g0 lam / 2) exp(i W t - lam |t|)``.

    This is the full-line extension of a Lorentzian J centred at ``W``;
    there is no half-line quadrature behind it and no thermal variant.
    """

    gamma0: float
    lam: float
    Omega: float

    def __post_init__(self):
        _positive(gamma0=self.gamma0, lam=self.lam)
        if not (self.Omega >= 0 and math.isfinite(self.Omega)):
            raise ConfigError(f"centre frequency Omega must be >= 0 and finite, got {self.Omega}")

    def J(self, w):
        w = np.asarray(w, dtype=float)
        return self.gamma0 * self.lam**2 / (2 * np.pi) / ((w - self.Omega) ** 2 + self.lam**2)

    def kernel(self, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * self.gamma0 * self.lam * np.exp(1j * self.Omega * t - self.lam * np.abs(t))


@dataclass(frozen=True)
class FlatCutoff:
    """J(w) = gamma / pi on [0, wmax]."""

    gamma: float
    wmax: float

    def __post_init__(self):
        _positive(gamma=self.gamma, wmax=self.wmax)

    def J(self, w):
        w = np.asarray(w, dtype=float)
        return np.where((w >= 0) & (w <= self.wmax), self.gamma / np.pi, 0.0)

    def J_over_w(self, w):
        raise ConfigError("FlatCutoff has J(0) > 0, so J(w)/w is unbounded and alpha2 diverges at finite temperature")

    def support(self):
        return 0.0, self.wmax, ()


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear J through ``(omega[k], values[k])``, zero outside."""

    omega: tuple
    values: tuple

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        j = np.asarray(self.values, dtype=float)
        if w.ndim != 1 or w.shape != j.shape or w.size < 2:
            raise ConfigError("tabulated spectral density needs matching 1D omega/J arrays of length >= 2")
        if np.any(np.diff(w) <= 0):
            raise ConfigError("tabulated omega must be strictly ascending")
        if w[0] < 0:
            raise ConfigError("tabulated omega must be non-negative")
        if np.any(j < 0) or not np.all(np.isfinite(j)):
            raise ConfigError("tabulated J must be finite and non-negative")
        if w[0] == 0 and j[0] != 0:
            raise ConfigError("tabulated J must vanish at omega=0 (J/omega must stay bounded)")
        object.__setattr__(self, "omega", tuple(float(x) for x in w))
        object.__setattr__(self, "values", tuple(float(x) for x in j))

    def J(self, w):
        return np.interp(w, self.omega, self.values, left=0.0, right=0.0)

    def J_over_w(self, w):
        w = np.asarray(w, dtype=float)
        w0, w1 = self.omega[0], self.omega[1]
        if w0 > 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(w > 0, self.J(w) / w, 0.0)
        slope = self.values[1] / w1
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(w > 0, self.J(w) / np.where(w > 0, w, 1.0), slope)

    def support(self):
        return self.omega[0], self.omega[-1], self.omega[1:-1]


@dataclass(frozen=True)
class Null:
    """J = 0: the uncoupled limit."""

    def J(self, w):
        return np.zeros_like(np.asarray(w, dtype=float))


SpectralModel = Union[OhmicExp, LorentzianExtended, FlatCutoff, Tabulated, Null]


def _positive(**params):
    for name, value in params.items():
        if not (value > 0 and math.isfinite(value)):
            raise ConfigError(f"spectral parameter {name} must be positive and finite, got {value}")


# --------------------------------------------------------------------------
# kernel evaluation
# --------------------------------------------------------------------------


def _xcoth(x):
    """x * coth(x), with the series near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.05
    xs = np.where(small, x, 0.0)
    x2 = xs * xs
    series = 1.0 + x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2**3 / 945.0
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.where(small, 1.0, x) / np.tanh(np.where(small, 1.0, x))
    return np.where(small, series, big)


def _quad_fourier(f, a, b, t, points=()):
    """int_a^b f(w) exp(i w t) dw by adaptive Gauss-Kronrod (QAGS / QAWO)."""
    if b <= a:
        return 0j
    edges = [a, *[p for p in points if a < p < b], b]
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        if t == 0.0:
            total += _checked_quad(f, lo, hi)
            continue
        re = _checked_quad(f, lo, hi, weight="cos", wvar=t)
        im = _checked_quad(f, lo, hi, weight="sin", wvar=t)
        total += re + 1j * im
    return total


def _checked_quad(f, lo, hi, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(
            f, lo, hi, epsabs=1e-15, epsrel=QUAD_RTOL, limit=400, full_output=1, **kw
        )[:3]
    if err > max(1e3 * QUAD_RTOL * abs(val), 1e-12):
        raise QuadratureError(
            f"quadrature did not converge on [{lo:g}, {hi:g}]: estimate {val:.3e} +- {err:.1e}", error_estimate=err
        )
    return val


def alpha1(model: SpectralModel, t: float) -> complex:
    """Response kernel ``alpha1(t) = int_0^inf J(w) e^{i w t} dw``."""
    t = float(t)
    if t < 0:
        return complex(np.conj(alpha1(model, -t)))
    if isinstance(model, Null):
        return 0j
    if isinstance(model, LorentzianExtended):
        return complex(model.kernel(t))
    if isinstance(model, OhmicExp):
        return model.eta * model.wc**2 / (1.0 - 1j * model.wc * t) ** 2
    return _alpha1_quad(model, t)


@lru_cache(maxsize=65536)
def _alpha1_quad(model, t):
    lo, hi, points = model.support()
    return complex(_quad_fourier(lambda w: float(model.J(w)), lo, hi, t, points))


def is_zero_temperature(beta) -> bool:
    return beta is None or (isinstance(beta, float) and math.isinf(beta) and beta > 0)


def alpha2(model: SpectralModel, beta, t: float) -> complex:
    """Thermal kernel ``int_0^inf J(w) coth(beta w/2) e^{i w t} dw``.

    At zero temperature this is ``alpha1`` exactly.
    """
    if beta is not None:
        beta = float(beta)
    if is_zero_temperature(beta):
        return alpha1(model, t)
    if not beta > 0:
        raise ConfigError(f"inverse temperature must be positive, got {beta}")
    t = float(t)
    if t < 0:
        return complex(np.conj(alpha2(model, beta, -t)))
    if isinstance(model, Null):
        return 0j
    if isinstance(model, LorentzianExtended):
        raise ConfigError("LorentzianExtended is kernel-defined and only supports zero temperature")
    return _alpha2_quad(model, beta, t)


@lru_cache(maxsize=65536)
def _alpha2_quad(model, beta, t):
    lo, hi, points = model.support()
    f = _thermal_integrand(model, beta)
    split = 2.0 / beta
    pts = tuple(sorted(set(points) | ({split} if lo < split < hi else set())))
    return complex(_quad_fourier(f, lo, hi, t, pts))


def _xcoth_scalar(x):
    if abs(x) < 0.05:
        x2 = x * x
        return 1.0 + x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2**3 / 945.0
    return x / math.tanh(x)


def _thermal_integrand(model, beta):
    """Scalar ``J(w) coth(beta w/2)`` written as ``(J/w)(2/beta) x coth x``."""
    scale = 2.0 / beta
    if isinstance(model, OhmicExp):
        eta, wc = model.eta, model.wc

        def f(w):
            return eta * math.exp(-w / wc) * scale * _xcoth_scalar(0.5 * beta * w)

        return f
    J_over_w = model.J_over_w  # raises for models with unbounded J/w

    def f(w):
        return float(J_over_w(w)) * scale * _xcoth_scalar(0.5 * beta * w)

    return f


# --------------------------------------------------------------------------
# sampled kernels
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ResponseKernel:
    """``alpha1``/``alpha2`` sampled at ``t_k = k h``, k = 0..N.

    ``a1_half``/``a2_half`` hold samples at ``(k + 1/2) h`` for k = 0..N-1
    when the kernel came from a model; otherwise they are interpolated on
    demand. Negative arguments are resolved by conjugate symmetry.
    """

    grid: TimeGrid
    a1: np.ndarray
    a2: np.ndarray
    beta: float = ZERO_TEMPERATURE
    a1_half: np.ndarray | None = field(default=None, repr=False)
    a2_half: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = self.grid.N + 1
        for name in ("a1", "a2"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=complex)
            if arr.shape != (n,):
                raise ConfigError(f"{name} must have N+1={n} samples, got shape {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("a1_half", "a2_half"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(arr, dtype=complex)
                if arr.shape != (n - 1,):
                    raise ConfigError(f"{name} must have N={n - 1} samples")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.beta is None:
            object.__setattr__(self, "beta", ZERO_TEMPERATURE)

    @property
    def zero_temperature(self) -> bool:
        return is_zero_temperature(self.beta) and np.array_equal(self.a1, self.a2)

    def half(self, which: int = 1) -> np.ndarray:
        stored = self.a1_half if which == 1 else self.a2_half
        if stored is not None:
            return stored
        return _interp_half(self.a1 if which == 1 else self.a2)

    def signed(self, which: int = 1, half: bool = False) -> np.ndarray:
        """Samples on ``k = -N..N`` (or half nodes ``-N+1/2..N-1/2``), index offset N."""
        if half:
            pos = self.half(which)
            return np.concatenate([np.conj(pos[::-1]), pos])
        pos = self.a1 if which == 1 else self.a2
        return np.concatenate([np.conj(pos[:0:-1]), pos])

    def conjugated(self) -> "ResponseKernel":
        """Kernel with ``alpha -> conj(alpha)`` on both channels."""
        return ResponseKernel(
            self.grid,
            np.conj(self.a1),
            np.conj(self.a2),
            self.beta,
            None if self.a1_half is None else np.conj(self.a1_half),
            None if self.a2_half is None else np.conj(self.a2_half),
        )


def _interp_half(a: np.ndarray) -> np.ndarray:
    """4-point Lagrange midpoint values, using conj symmetry below t=0."""
    ext = np.concatenate([np.conj(a[1:2]), a])
    n = a.size - 1
    out = np.empty(n, dtype=complex)
    # interior: (-a[k-1] + 9 a[k] + 9 a[k+1] - a[k+2]) / 16
    if n >= 2:
        k = np.arange(n - 1)
        out[: n - 1] = (-ext[k] + 9 * ext[k + 1] + 9 * ext[k + 2] - ext[k + 3]) / 16.0
    # last interval: one-sided cubic through a[n-3..n]
    if n >= 3:
        out[n - 1] = (a[n - 3] - 5 * a[n - 2] + 15 * a[n - 1] + 5 * a[n]) / 16.0
    else:
        out[n - 1] = 0.5 * (a[n - 1] + a[n])
    return out


def sample_kernels(model: SpectralModel, beta, grid: TimeGrid) -> ResponseKernel:
    """Tabulate both kernels on the grid nodes and half nodes."""
    if beta is None:
        beta = ZERO_TEMPERATURE
    beta = float(beta)
    fine = 0.5 * grid.h * np.arange(2 * grid.N + 1)
    if isinstance(model, Null):
        z = np.zeros(grid.N + 1, dtype=complex)
        return ResponseKernel(grid, z, z.copy(), beta, z[:-1].copy(), z[:-1].copy())
    if isinstance(model, (LorentzianExtended,)):
        f1 = model.kernel(fine).astype(complex)
    elif isinstance(model, OhmicExp):
        f1 = model.eta * model.wc**2 / (1.0 - 1j * model.wc * fine) ** 2
    else:
        f1 = np.array([alpha1(model, t) for t in fine])
    if is_zero_temperature(beta):
        f2 = f1.copy()
    else:
        f2 = np.array([alpha2(model, beta, t) for t in fine])
    return ResponseKernel(grid, f1[::2], f2[::2], beta, f1[1::2], f2[1::2])
