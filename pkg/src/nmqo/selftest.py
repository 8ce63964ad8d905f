"""Quick built-in sanity checks (``nmqo selftest``); a few seconds in total."""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from ._accel import backend
from .config import parse_config
from .dynamics import liouville_apply
from .green import solve_u
from .kernels import LorentzianExtended, TimeGrid, sample_kernels
from .pipeline import compare_methods


def _null_gap():
    cfg = parse_config("[bath]\nmodel = null\n[grid]\nT = 2\nN = 40\n")
    report, _, _ = compare_methods(cfg)
    return max(report.max_abs.values()), 1e-12


def _exponential_kernel():
    m = LorentzianExtended(0.2, 1.0, 1.0)
    g = TimeGrid.from_horizon(5.0, 2000)
    u = solve_u(sample_kernels(m, None, g), 1.0, g)
    M = np.array([[-1j, -1.0], [0.5 * m.gamma0 * m.lam, -(m.lam + 1j * m.Omega)]])
    step = expm(M * 50 * g.h)
    ref, s = [], np.array([1.0, 0.0], dtype=complex)
    for _ in range(0, g.N + 1, 50):
        ref.append(s[0])
        s = step @ s
    return float(np.max(np.abs(u[::50] - np.array(ref)))), 1e-6


def _traceless():
    rng = np.random.default_rng(0)
    worst = 0.0
    for kind, d in (("cavity", 6), ("two-state", 2)):
        for _ in range(20):
            x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho = x + x.conj().T
            c = {"A1": 1.1, "A2": 0.3, "A3": 0.2, "R": 0.4, "S": -0.1}
            worst = max(worst, abs(np.trace(liouville_apply(kind, c, rho, omega0=1.0))))
    return worst, 1e-12


CHECKS = {
    "null-bath route gap": _null_gap,
    "exponential-kernel closed form": _exponential_kernel,
    "generator tracelessness": _traceless,
}


def run_selftest(stream=None) -> bool:
    ok = True
    print(f"backend: {backend()}", file=stream)
    for name, fn in CHECKS.items():
        value, tol = fn()
        passed = value <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {value:.3e} (tol {tol:g})", file=stream)
    return ok
