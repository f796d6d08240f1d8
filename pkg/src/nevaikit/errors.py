"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``ConfigError`` -> 2,
``DomainError`` (and subclasses) -> 3, ``ConvergenceError`` -> 4.
"""


class NevaiError(Exception):
    """Base class for all package errors."""


class ConfigError(NevaiError, ValueError):
    """Invalid experiment configuration."""


class DomainError(NevaiError, ValueError):
    """Numeric input outside the domain of an operation."""


class DegenerateInputError(DomainError):
    """Inputs lie in a cancellation regime (e.g. nearly coincident points)."""


class ConditioningError(DomainError):
    """A linear solve lost too many significant digits."""


class NearSingularError(DomainError):
    """Elimination hit a pivot too small to divide by."""


class ConvergenceError(NevaiError, RuntimeError):
    """An iterative method did not meet its residual target."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
