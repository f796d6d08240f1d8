"""Numerics for orthogonal polynomials on the real line and Jacobi operators."""

__version__ = "0.1.0"

from .errors import (ConditioningError, ConfigError, ConvergenceError, DegenerateInputError,
                     DomainError, NearSingularError, NevaiError)
from .models import (JacobiSequence, make_anderson, make_block41, make_block51, make_constant,
                     make_fibonacci, make_free, make_periodic, make_szwarc, model_from_spec,
                     params_at)

__all__ = [
    "__version__", "ConditioningError", "ConfigError", "ConvergenceError",
    "DegenerateInputError", "DomainError", "NearSingularError", "NevaiError",
    "JacobiSequence", "make_anderson", "make_block41", "make_block51", "make_constant",
    "make_fibonacci", "make_free", "make_periodic", "make_szwarc", "model_from_spec",
    "params_at",
]
