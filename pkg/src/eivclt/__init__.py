"""Estimators and Studentized central limit theorems for linear error-in-variables models."""

from .estimators import EstimateTriple, estimate
from .exceptions import (
    BetaNearZero,
    DegenerateDenominator,
    EIVError,
    NotPositiveDefinite,
    StatisticalDegeneracy,
    TooManyFailures,
    ValidationError,
)
from .linalg import RootMode, cholesky_sqrt, inv_transpose_sqrt, sym_sqrt
from .model import Dataset, GroundTruth, IdentifiabilityConfig, MomentStats, Variant, compute_moments
from .studentize import (
    ConfidenceRegion,
    StudentizedResult,
    chi2_quantile,
    confidence_region,
    studentize,
)

__version__ = "0.1.0"

__all__ = [
    "BetaNearZero",
    "ConfidenceRegion",
    "Dataset",
    "DegenerateDenominator",
    "EIVError",
    "EstimateTriple",
    "GroundTruth",
    "IdentifiabilityConfig",
    "MomentStats",
    "NotPositiveDefinite",
    "RootMode",
    "StatisticalDegeneracy",
    "StudentizedResult",
    "TooManyFailures",
    "ValidationError",
    "Variant",
    "chi2_quantile",
    "cholesky_sqrt",
    "compute_moments",
    "confidence_region",
    "estimate",
    "inv_transpose_sqrt",
    "studentize",
    "sym_sqrt",
]
