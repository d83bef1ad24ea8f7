"""Exception hierarchy shared by all eivclt modules."""

from __future__ import annotations


class EIVError(Exception):
    """Base class for every error raised by eivclt."""


class ValidationError(EIVError, ValueError):
    """Invalid inputs: malformed data, inconsistent configuration, bad ranges."""


class StatisticalDegeneracy(EIVError):
    """The data do not support the requested computation.

    Subclasses mark the failure modes a Monte Carlo run tallies per replication.
    """


class NotPositiveDefinite(StatisticalDegeneracy):
    def __init__(self, message: str, value: float | None = None) -> None:
        super().__init__(message)
        self.value = value


class DegenerateDenominator(StatisticalDegeneracy):
    """A proviso of the estimator (a non-zero or positive denominator) failed.

    ``proviso`` names the condition, ``value`` is the observed quantity.
    """

    def __init__(self, proviso: str, value: float) -> None:
        super().__init__(f"degenerate denominator: {proviso} (observed {value!r})")
        self.proviso = proviso
        self.value = value


class BetaNearZero(StatisticalDegeneracy):
    def __init__(self, beta: float, tolerance: float) -> None:
        super().__init__(f"|beta| = {abs(beta):.3g} is within tolerance {tolerance:.3g} of zero")
        self.beta = beta
        self.tolerance = tolerance


class TooManyFailures(EIVError):
    """A Monte Carlo run had more failed replications than allowed."""
