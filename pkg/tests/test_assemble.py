import numpy as np
import pytest

from nmqo.assemble import CoeffSeries, assemble_A, assemble_CD, assemble_RS, zero_drive_extra
from nmqo.coefffuncs import compute_y, solve_cavity, solve_x13, solve_x21, solve_x_tsa
from nmqo.errors import ConfigError
from nmqo.green import solve_u
from nmqo.kernels import Null, TimeGrid, sample_kernels

from conftest import rel_gap

W0 = 1.0


def cavity_A(kernel, grid):
    x21 = solve_x21(kernel, W0, grid)
    xs = solve_cavity(kernel, W0, grid, x21=x21)
    return assemble_A(kernel, W0, xs["x11"], x21, compute_y(xs["x11"], xs["x12"]), grid)


def test_coeff_series_validation(small_grid):
    n = small_grid.N + 1
    with pytest.raises(ConfigError):
        CoeffSeries(small_grid, "bogus", {})
    with pytest.raises(TypeError):
        CoeffSeries(small_grid, "two-state", {"R": np.zeros(n, complex), "S": np.zeros(n)})
    with pytest.raises(ConfigError):
        CoeffSeries(small_grid, "two-state", {"R": np.zeros(3), "S": np.zeros(3)})
    cs = CoeffSeries(small_grid, "two-state", {"R": np.ones(n), "S": np.zeros(n)})
    assert cs.at(3) == {"R": 1.0, "S": 0.0}
    with pytest.raises(ValueError):
        cs["R"][0] = 2.0


def test_A_null(null_kernel, small_grid):
    A = cavity_A(null_kernel, small_grid)
    np.testing.assert_array_equal(A["A1"], W0)
    assert not np.any(A["A2"]) and not np.any(A["A3"])


def test_A_at_t0_and_real(weak_kernel, small_grid):
    A = cavity_A(weak_kernel, small_grid)
    assert (A["A1"][0], A["A2"][0], A["A3"][0]) == (W0, 0.0, 0.0)
    for name in A.names:
        assert A[name].dtype == np.float64


def test_A_matches_B_reference(ref_integral, ref_green):
    for j in "123":
        assert rel_gap(ref_integral.coeffs["A" + j], ref_green.coeffs["B" + j]) <= 5e-4


def test_CD_zero_drive(weak_kernel, small_grid):
    eps = np.zeros(small_grid.N + 1)
    CD = assemble_CD(weak_kernel, solve_x13(weak_kernel, W0, eps, small_grid), eps, small_grid)
    assert not np.any(CD["C"]) and not np.any(CD["D"])
    zero = zero_drive_extra(small_grid)
    np.testing.assert_array_equal(zero["C"], CD["C"])


def test_CD_null_kernel(null_kernel, small_grid):
    eps = 0.3 * np.cos(small_grid.times)
    CD = assemble_CD(null_kernel, solve_x13(null_kernel, W0, eps, small_grid), eps, small_grid)
    np.testing.assert_array_equal(CD["C"], -1j * eps)
    np.testing.assert_array_equal(CD["D"], -1j * eps)


def test_D_is_minus_conj_C(weak_kernel, small_grid):
    eps = 0.2 + 0.1 * np.sin(3 * small_grid.times)
    CD = assemble_CD(weak_kernel, solve_x13(weak_kernel, W0, eps, small_grid), eps, small_grid)
    assert np.array_equal(CD["D"], -np.conj(CD["C"]))
    assert CD["C"][0] == -1j * eps[0]


def test_RS_null_and_t0(small_grid, lorentz):
    k0 = sample_kernels(Null(), None, small_grid)
    RS0 = assemble_RS(k0, solve_x_tsa(k0, W0, small_grid), small_grid)
    assert not np.any(RS0["R"]) and not np.any(RS0["S"])
    k = sample_kernels(lorentz, None, small_grid)
    RS = assemble_RS(k, solve_x_tsa(k, W0, small_grid), small_grid)
    assert RS["R"][0] == 0 and RS["S"][0] == 0
    assert RS["R"].dtype == np.float64 and RS["S"].dtype == np.float64


def test_RS_rejects_thermal_kernel(weak_kernel, small_grid):
    with pytest.raises(ConfigError):
        assemble_RS(weak_kernel, solve_x_tsa(sample_kernels(Null(), None, small_grid), W0, small_grid), small_grid)


def test_integrated_rate_matches_green(lorentz):
    g = TimeGrid.from_horizon(10.0, 500)
    k = sample_kernels(lorentz, None, g)
    RS = assemble_RS(k, solve_x_tsa(k, W0, g), g)
    u = solve_u(k.conjugated(), W0, g)
    intR = np.concatenate([[0.0], np.cumsum(0.5 * g.h * (RS["R"][1:] + RS["R"][:-1]))])
    assert abs(intR[-1] + 2 * np.log(abs(u[-1]))) <= 1e-3
    assert np.max(np.abs(intR + 2 * np.log(np.abs(u)))) <= 1e-3
