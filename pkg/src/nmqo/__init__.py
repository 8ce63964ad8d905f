"""Time-local non-Markovian master equations for a cavity mode or a two-state
atom coupled to a bosonic bath, with an independent Green's-function oracle
and a stochastic-Liouville Monte Carlo cross-check."""
from ._accel import HAS_NUMBA, backend
from .assemble import CoeffSeries, assemble_A, assemble_CD, assemble_RS
from .coefffuncs import (OneVarTable, SolverPolicy, TwoVarTable, compute_y, solve_cavity, solve_x11, solve_x12,
                         solve_x13, solve_x21, solve_x_tsa, verify_x21_translation_invariance)
from .dynamics import Drive, Scenario, Trajectory, liouville_apply, observables, propagate
from .errors import (ConfigError, EnsembleError, GridMismatchError, NMQOError, QuadratureError, SingularityError,
                     SolverError, StepSizeError, TruncationError)
from .green import GreenSolution, assemble_B, solve_green, solve_u, xbar_tables
from .kernels import (ZERO_TEMPERATURE, FlatCutoff, LorentzianExtended, Null, OhmicExp, ResponseKernel, Tabulated,
                      TimeGrid, alpha1, alpha2, sample_kernels)
from .unravel import EnsembleResult, NoisePath, run_ensemble, sample_gbar, step_sde
from .config import RunConfig, load_config, parse_config
from .pipeline import ComparisonReport, compare_methods, green_route, integral_route, scaling_ratios

__version__ = "0.1.0"
