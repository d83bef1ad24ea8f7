"""Slope, intercept and error-variance estimators for the linear EIV model.

Variant A1 uses the generalized least squares slope (orthogonal regression
when lambda = 1); variants A2 and A3 use modified least squares slopes. The
error variance is estimated by the method of moments in every case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import DegenerateDenominator
from .model import Dataset, IdentifiabilityConfig, MomentStats, Variant, compute_moments

__all__ = ["DEGENERACY_TOLERANCE", "EstimateTriple", "estimate", "estimate_from_moments"]

DEGENERACY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class EstimateTriple:
    beta_hat: float
    alpha_hat: float
    gamma_hat: float
    variant: Variant

    @property
    def gamma_negative(self) -> bool:
        """Method-of-moments variance came out negative (returned unclamped)."""
        return self.gamma_hat < 0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.beta_hat, self.alpha_hat, self.gamma_hat)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.name,
            "beta_hat": self.beta_hat,
            "alpha_hat": self.alpha_hat,
            "gamma_hat": self.gamma_hat,
            "gamma_negative": self.gamma_negative,
        }


def _guard(value: float, tol: float, proviso: str, positive: bool = False) -> None:
    bad = value <= tol if positive else abs(value) <= tol
    if bad or not math.isfinite(value):
        raise DegenerateDenominator(proviso, value)


def estimate_from_moments(stats: MomentStats, config: IdentifiabilityConfig) -> EstimateTriple:
    tol = DEGENERACY_TOLERANCE * stats.scale
    S_xx, S_yy, S_xy = stats.S_xx, stats.S_yy, stats.S_xy
    v = config.variant
    if v is Variant.A1:
        lam = config.lam
        _guard(S_xy, tol, "S_xy != 0")
        t = (lam * S_xx - S_yy) / (2.0 * S_xy)
        beta = math.copysign(math.sqrt(t * t + lam), S_xy) - t
        gamma = (S_yy - 2.0 * S_xy * beta + S_xx * beta * beta) / (lam + beta * beta)
    elif v is Variant.A2:
        num = S_yy - config.lambda_theta
        den = S_xy - config.mu
        _guard(den, tol, "S_xy - mu != 0")
        _guard(num, tol, "S_yy - lambda*theta > 0", positive=True)
        beta = num / den
        gamma = S_xx - den / beta
    else:
        num = S_xy - config.mu
        den = S_xx - config.theta
        _guard(den, tol, "S_xx - theta > 0", positive=True)
        beta = num / den
        gamma = S_yy - num * beta
    alpha = stats.y_bar - stats.x_bar * beta
    return EstimateTriple(float(beta), float(alpha), float(gamma), v)


def estimate(data: Dataset, config: IdentifiabilityConfig) -> EstimateTriple:
    """Estimate ``(beta, alpha, gamma)`` under ``config``'s identifiability assumption.

    Raises DegenerateDenominator when the variant's proviso fails, e.g.
    ``S_xy == 0`` under A1 or ``S_xx - theta <= 0`` under A3.
    """
    return estimate_from_moments(compute_moments(data), config)
