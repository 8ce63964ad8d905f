"""Exception hierarchy. Each failure class maps to one CLI exit code."""
from __future__ import annotations


class NMQOError(Exception):
    exit_code = 1


class ConfigError(NMQOError, ValueError):
    exit_code = 2


class GridMismatchError(NMQOError, ValueError):
    exit_code = 2


class QuadratureError(NMQOError, RuntimeError):
    exit_code = 3

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class SolverError(NMQOError, RuntimeError):
    """Non-convergent or singular coefficient-function solve."""

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SingularityError(NMQOError, RuntimeError):
    """|u(t)| fell below the threshold in the Green's-function route."""

    exit_code = 4

    def __init__(self, message, time=None, index=None):
        super().__init__(message)
        self.time = time
        self.index = index


class TruncationError(NMQOError, RuntimeError):
    """Top Fock level populated beyond tolerance."""

    exit_code = 5

    def __init__(self, message, time=None, population=None):
        super().__init__(message)
        self.time = time
        self.population = population


class StepSizeError(NMQOError, RuntimeError):
    exit_code = 3


class EnsembleError(NMQOError, RuntimeError):
    exit_code = 3
