import numpy as np
import pytest

from nmqo.coefffuncs import (OneVarTable, SolverPolicy, TwoVarTable, compute_y, solve_cavity, solve_x11, solve_x12,
                             solve_x13, solve_x21, solve_x21_2d, solve_x_tsa, verify_x21_translation_invariance)
from nmqo.errors import ConfigError, GridMismatchError, SolverError
from nmqo.kernels import OhmicExp, ResponseKernel, TimeGrid, sample_kernels

W0 = 1.0


def trap(n):
    """Trapezoid weights (in units of h) over n+1 nodes."""
    w = np.ones(n + 1)
    if n == 0:
        return np.zeros(1)
    w[0] = w[-1] = 0.5
    return w


def residual(f, g, a, h, omega0, sign):
    """Explicit-loop residual of f(t') = g(t') + int_{t'}^t dt1 e^{-is w0 (t1-t')} int_0^t1 a(t1-t2) f(t2)."""
    n = f.shape[0] - 1
    worst = 0.0
    for i in range(n + 1):
        for j in range(i + 1):
            outer = 0j
            wo = trap(i - j)
            for m in range(j, i + 1):
                inner = 0j
                wi = trap(m)
                for l in range(m + 1):
                    inner += h * wi[l] * a[m - l] * f[i, l]
                outer += h * wo[m - j] * np.exp(-1j * sign * omega0 * (m - j) * h) * inner
            worst = max(worst, abs(f[i, j] - g[i, j] - outer))
    return worst


# -- tables -----------------------------------------------------------------


def test_two_var_table_triangle_contract(small_grid):
    t = TwoVarTable(small_grid, np.ones((41, 41)), "x")
    assert t(3, 2) == 1 and t(3, 3) == 1
    assert t.values[2, 3] == 0
    with pytest.raises(IndexError):
        t(2, 3)
    with pytest.raises(GridMismatchError):
        TwoVarTable(small_grid, np.ones((5, 5)))


def test_one_var_table_shape(small_grid):
    with pytest.raises(GridMismatchError):
        OneVarTable(small_grid, np.ones(3))


def test_policy_validation():
    for kw in ({"method": "lu"}, {"picard_tol": 0.0}, {"picard_max_iter": 0}, {"relaxation": 1.5}):
        with pytest.raises(ConfigError):
            SolverPolicy(**kw)


def test_small_grid_rejected():
    g = TimeGrid(0.1, 2)
    k = sample_kernels(OhmicExp(0.05, 5.0), 1.0, g)
    with pytest.raises(ConfigError):
        solve_x11(k, W0, g)


def test_grid_mismatch(weak_kernel):
    with pytest.raises(GridMismatchError):
        solve_x11(weak_kernel, W0, TimeGrid(0.05, 20))


# -- null kernel closed forms -----------------------------------------------


def test_null_x11_is_free_phase(null_kernel, small_grid):
    x = solve_x11(null_kernel, W0, small_grid).values
    i, j = np.tril_indices(small_grid.N + 1)
    np.testing.assert_allclose(x[i, j], np.exp(-1j * W0 * (i - j) * small_grid.h), atol=1e-15)


def test_null_x21_and_x12(null_kernel, small_grid):
    x21 = solve_x21(null_kernel, W0, small_grid)
    np.testing.assert_allclose(x21.values, np.exp(-1j * W0 * small_grid.times), atol=1e-15)
    assert not np.any(solve_x12(null_kernel, W0, small_grid, x21).values)


def test_null_x_tsa(small_grid):
    from nmqo.kernels import Null

    x = solve_x_tsa(sample_kernels(Null(), None, small_grid), W0, small_grid).values
    i, j = np.tril_indices(small_grid.N + 1)
    np.testing.assert_allclose(x[i, j], np.exp(-1j * W0 * (j - i) * small_grid.h), atol=1e-15)


def test_null_x13_constant_drive(null_kernel, small_grid):
    E = 0.3
    x = solve_x13(null_kernel, W0, np.full(small_grid.N + 1, E), small_grid).values
    i, j = np.tril_indices(small_grid.N + 1)
    s = (i - j) * small_grid.h
    exact = -(2 * E / W0) * (1 - np.exp(-1j * W0 * s))
    # trapezoid on the phase integral: O(h^2)
    assert np.max(np.abs(x[i, j] - exact)) < 0.5 * small_grid.h**2 * 2 * E * small_grid.T


# -- diagonals and linearity ------------------------------------------------


def test_diagonal_constraints(weak_kernel, small_grid):
    x21 = solve_x21(weak_kernel, W0, small_grid)
    drive = 0.2 * np.cos(small_grid.times)
    xs = solve_cavity(weak_kernel, W0, small_grid, x21=x21, drive=drive)
    y = compute_y(xs["x11"], xs["x12"])
    np.testing.assert_allclose(xs["x11"].diagonal(), 1.0, atol=1e-15)
    np.testing.assert_allclose(xs["x12"].diagonal(), 0.0, atol=1e-15)
    np.testing.assert_allclose(xs["x13"].diagonal(), 0.0, atol=1e-15)
    np.testing.assert_allclose(y.diagonal(), 1.0, atol=1e-15)
    assert x21(0) == 1


def test_x13_linear_in_drive(weak_kernel, small_grid):
    eps = 0.1 * np.sin(2 * small_grid.times) + 0.05
    x1 = solve_x13(weak_kernel, W0, eps, small_grid).values
    x2 = solve_x13(weak_kernel, W0, 2 * eps, small_grid).values
    np.testing.assert_allclose(x2, 2 * x1, rtol=1e-13, atol=1e-15)
    assert not np.any(solve_x13(weak_kernel, W0, np.zeros(small_grid.N + 1), small_grid).values)


def test_x13_accepts_callable(weak_kernel, small_grid):
    a = solve_x13(weak_kernel, W0, lambda t: 0.1 * np.cos(t), small_grid).values
    b = solve_x13(weak_kernel, W0, 0.1 * np.cos(small_grid.times), small_grid).values
    np.testing.assert_array_equal(a, b)


def test_x12_vanishes_without_thermal_kernel(weak_kernel, small_grid):
    k = ResponseKernel(small_grid, weak_kernel.a1, np.zeros_like(weak_kernel.a2), 1.0)
    x21 = solve_x21(k, W0, small_grid)
    assert not np.any(solve_x12(k, W0, small_grid, x21).values)
    x11 = solve_x11(k, W0, small_grid)
    np.testing.assert_array_equal(compute_y(x11, solve_x12(k, W0, small_grid, x21)).values, x11.values)


# -- brute-force residual oracles -------------------------------------------


def test_x11_satisfies_discrete_equation():
    g = TimeGrid.from_horizon(1.2, 12)
    k = sample_kernels(OhmicExp(0.3, 4.0), 1.0, g)
    x = solve_x11(k, W0, g).values
    i, j = np.indices(x.shape)
    src = np.where(j <= i, np.exp(-1j * W0 * (i - j) * g.h), 0)
    assert residual(x, src, k.a1, g.h, W0, +1) < 1e-13


def test_x_tsa_satisfies_discrete_equation(lorentz):
    g = TimeGrid.from_horizon(1.2, 12)
    k = sample_kernels(lorentz, None, g)
    x = solve_x_tsa(k, W0, g).values
    i, j = np.indices(x.shape)
    src = np.where(j <= i, np.exp(-1j * W0 * (j - i) * g.h), 0)
    assert residual(x, src, k.a1, g.h, W0, -1) < 1e-13


# -- solver policies --------------------------------------------------------


def test_picard_matches_dense(weak_kernel, small_grid):
    dense = solve_x11(weak_kernel, W0, small_grid).values
    pic = solve_x11(weak_kernel, W0, small_grid, SolverPolicy("picard", picard_tol=1e-14)).values
    assert np.max(np.abs(dense - pic)) < 1e-12


def test_picard_divergence_reports_diagnostics():
    g = TimeGrid.from_horizon(4.0, 40)
    k = sample_kernels(OhmicExp(2.0, 5.0), 1.0, g)
    with pytest.raises(SolverError) as exc:
        solve_x11(k, W0, g, SolverPolicy("picard"))
    assert exc.value.exit_code == 3
    assert "iterations" in exc.value.diagnostics and "t=" in str(exc.value)


def test_picard_iteration_budget(weak_kernel, small_grid):
    with pytest.raises(SolverError):
        solve_x11(weak_kernel, W0, small_grid, SolverPolicy("picard", picard_tol=1e-300, picard_max_iter=3))


# -- x21 one-variable form --------------------------------------------------


def test_x21_translation_invariance_null(null_kernel, small_grid):
    assert verify_x21_translation_invariance(null_kernel, W0, small_grid) < 1e-14


def test_x21_translation_invariance_weak():
    g = TimeGrid.from_horizon(4.0, 64)
    k = sample_kernels(OhmicExp(0.05, 5.0), 1.0, g)
    assert verify_x21_translation_invariance(k, W0, g) <= 10 * g.h**2


def test_x21_translation_invariance_large_grid_refused(ref_kernel, ref_grid):
    with pytest.raises(ConfigError):
        verify_x21_translation_invariance(ref_kernel, W0, ref_grid)


def test_x21_2d_rows_depend_only_on_lag():
    g = TimeGrid.from_horizon(2.0, 20)
    k = sample_kernels(OhmicExp(0.2, 3.0), 1.0, g)
    two = solve_x21_2d(k, W0, g).values
    for lag in (0, 3, 11):
        diag = np.array([two[i, i - lag] for i in range(lag, g.N + 1)])
        assert np.ptp(diag.real) < 1e-12 and np.ptp(diag.imag) < 1e-12


# -- green-route oracles on the reference scenario ---------------------------


def test_x11_matches_green(ref_integral, ref_green):
    x11 = ref_integral.tables["x11"].values
    assert np.max(np.abs(np.conj(x11) - ref_green.tables["x11bar"].values)) <= 5e-4


def test_x21_matches_green(ref_integral, ref_green):
    x21 = ref_integral.tables["x21"].values
    assert np.max(np.abs(np.conj(x21) - ref_green.tables["x21bar"].values)) <= 5e-4


def test_y_matches_green(ref_integral, ref_green):
    y = ref_integral.tables["y"].values
    assert np.max(np.abs(np.conj(y) - ref_green.tables["ybar"].values)) <= 5e-4
