"""Truncated full Fock space, the shift ucp map and its peripheral boundary."""

from .errors import (BasisError, CapacityError, ConfigError, ConvergenceError,
                     FactorizationError, FockboundError, TrustError, ValidationError)
from .scalars import GaussianRational, UnitEigenvalue
from .words import TruncationParams, Weights
from .algebra import AlgebraElement, EigenTaggedElement
from .operators import TruncatedOperator
from .dynamics import UcpMap

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement", "BasisError", "CapacityError", "ConfigError", "ConvergenceError",
    "EigenTaggedElement", "FactorizationError", "FockboundError", "GaussianRational",
    "TruncatedOperator", "TruncationParams", "TrustError", "UcpMap", "UnitEigenvalue",
    "ValidationError", "Weights", "__version__",
]
