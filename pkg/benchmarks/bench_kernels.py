"""Time the numba and plain-NumPy flavours of each hot kernel.

    python3 benchmarks/bench_kernels.py [--N 400] [--repeat 3]

Both flavours are called directly, so the script needs numba installed
(the package itself runs without it when NMQO_DISABLE_NUMBA=1).
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from nmqo import _kernels, unravel
from nmqo._accel import HAS_NUMBA
from nmqo.coefffuncs import solve_x21  # noqa: F401  (warms imports)
from nmqo.dynamics import Scenario
from nmqo.green import solve_u, v_sources
from nmqo.kernels import LorentzianExtended, OhmicExp, TimeGrid, sample_kernels


def best_of(fn, repeat):
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(N):
    g = TimeGrid.from_horizon(4.0, N)
    k = sample_kernels(OhmicExp(0.05, 5.0), 1.0, g)
    a, ah = np.conj(k.a1), np.conj(k.half(1))
    z = np.zeros(N + 1, dtype=complex)
    u = solve_u(k, 1.0, g)
    S, Sh = v_sources(k, g, u)
    phi = np.exp(-1j * g.h * np.arange(N + 1))
    P = g.h * np.convolve(phi, a)[: N + 1]

    m = LorentzianExtended(0.2, 1.0, 1.0)
    gs = TimeGrid.from_horizon(2.5, 250)
    ks = sample_kernels(m, None, gs)
    sc = Scenario("two-state", 1.0, m, initial=("excited",))
    nu = np.stack([unravel.trajectory_rng(1, i).standard_normal((4, 2, gs.N)) for i in range(200)]) / np.sqrt(gs.h)
    g1, g2 = unravel._gbar_from_nu(ks, nu, gs.h, gs.N)
    E = unravel._eta_conj(nu)
    f1, f2 = sc.operators()
    P2 = np.diag([1.0, 0.0]).astype(complex)
    C2 = np.array([[0, 0], [1, 0]], dtype=complex)
    sde = (sc.initial_state(), sc.hamiltonian(), f1, f2, g1, g2, E, gs.h, 2, P2, C2)

    return {
        f"x21_march (N={N})": (lambda f: lambda: f(phi, P, a[0], g.h, 1.0 + 0j), "x21_march"),
        f"vide_rk4 (N={N})": (lambda f: lambda: f(a, ah, 1.0, g.h, N, 1.0 + 0j, z, z[:-1]), "vide_rk4"),
        f"v_rows (N={N})": (lambda f: lambda: f(a, ah, 1.0, g.h, S, Sh), "v_rows"),
        "sde batch (200 traj x 250 steps)": (lambda f: lambda: f(*sde), "run_batch"),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=400)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if not HAS_NUMBA:
        raise SystemExit("numba is disabled or missing; nothing to compare")
    flavours = {
        "x21_march": (_kernels.x21_march_nb, _kernels.x21_march_np),
        "vide_rk4": (_kernels.vide_rk4_nb, _kernels.vide_rk4_np),
        "v_rows": (_kernels.v_rows_nb, _kernels.v_rows_np),
        "run_batch": (unravel._run_batch_nb, unravel._run_batch_np),
    }
    print(f"{'kernel':36s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for label, (make, key) in cases(args.N).items():
        nb, npf = flavours[key]
        t_nb = best_of(make(nb), args.repeat)
        t_np = best_of(make(npf), args.repeat)
        print(f"{label:36s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
