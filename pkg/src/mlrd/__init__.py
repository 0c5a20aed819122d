"""Simulation, normalization and Monte Carlo verification for multivariate long-memory processes."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    ContractError,
    DomainError,
    EvaluationError,
    FactorizationError,
    HypothesisError,
    MLRDError,
    RankUndeterminedError,
    SingularityError,
    UnsupportedOrderError,
)
from .model import MemoryParameters, ProcessSpec, SlowlyVaryingSpec, limiting_R  # noqa: E402

__all__ = [
    "ConfigurationError",
    "ContractError",
    "DomainError",
    "EvaluationError",
    "FactorizationError",
    "HypothesisError",
    "MLRDError",
    "MemoryParameters",
    "ProcessSpec",
    "RankUndeterminedError",
    "SingularityError",
    "SlowlyVaryingSpec",
    "UnsupportedOrderError",
    "limiting_R",
]
