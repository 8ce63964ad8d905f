import numpy as np
import pytest

from nmqo.dynamics import Scenario
from nmqo.kernels import LorentzianExtended, Null, OhmicExp, TimeGrid, sample_kernels
from nmqo.pipeline import green_route, integral_route

REF_MODEL = OhmicExp(0.05, 5.0)
REF_BETA = 1.0
OMEGA0 = 1.0


@pytest.fixture(scope="session")
def ref_grid():
    return TimeGrid.from_horizon(4.0, 400)


@pytest.fixture(scope="session")
def ref_kernel(ref_grid):
    return sample_kernels(REF_MODEL, REF_BETA, ref_grid)


@pytest.fixture(scope="session")
def ref_scenario():
    return Scenario("cavity", OMEGA0, REF_MODEL, beta=REF_BETA, n_max=16, initial=("fock", 1))


@pytest.fixture(scope="session")
def ref_integral(ref_kernel, ref_scenario, ref_grid):
    return integral_route(ref_kernel, ref_scenario, ref_grid)


@pytest.fixture(scope="session")
def ref_green(ref_kernel, ref_scenario, ref_grid):
    return green_route(ref_kernel, ref_scenario, ref_grid)


@pytest.fixture
def small_grid():
    return TimeGrid.from_horizon(2.0, 40)


@pytest.fixture
def null_kernel(small_grid):
    return sample_kernels(Null(), 1.0, small_grid)


@pytest.fixture
def weak_kernel(small_grid):
    return sample_kernels(OhmicExp(0.05, 5.0), 1.0, small_grid)


@pytest.fixture
def lorentz():
    return LorentzianExtended(0.2, 1.0, 1.0)


def rel_gap(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# -- acceptance summary -------------------------------------------------------

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Recorder for acceptance verdicts; the lines are echoed in the terminal summary."""

    def record(number, name, passed, detail=""):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'} {name}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
