"""Exception hierarchy. Each family maps onto one CLI exit code."""

from __future__ import annotations


class QsvmError(Exception):
    exit_code = 1
    code = "E_GENERIC"


class InputError(QsvmError, ValueError):
    """Malformed or inconsistent user data."""

    exit_code = 2
    code = "E_INPUT"


class ConfigurationError(QsvmError, ValueError):
    """Solver or experiment parameters that cannot produce a meaningful run."""

    exit_code = 3
    code = "E_CONFIG"


class CapacityError(ConfigurationError):
    code = "E_CAPACITY"


class NumericalError(QsvmError, ArithmeticError):
    exit_code = 4
    code = "E_NUMERICAL"


class InvariantViolation(NumericalError):
    """A state or operator failed its norm/trace/Hermiticity check."""

    code = "E_INVARIANT"


class SingularMatrixError(NumericalError):
    code = "E_SINGULAR"

    def __init__(self, message: str, pivot_index: int):
        super().__init__(message)
        self.pivot_index = pivot_index


class DegenerateError(NumericalError):
    code = "E_DEGENERATE"


class EmptySolutionError(NumericalError):
    """Every eigencomponent was removed by the eigenvalue filter."""

    code = "E_EMPTY_SOLUTION"

    def __init__(self, message: str, spectrum=None):
        super().__init__(message)
        self.spectrum = None if spectrum is None else [float(v) for v in spectrum]
