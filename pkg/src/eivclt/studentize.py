"""Studentized statistics for the estimator triples, and confidence regions.

For variant ``j`` the per-observation vectors ``z_i = (u_i, v_i, w_i)`` are
built from the centered cross-products ``s_i`` and a slope value (the true
slope for the "a" mode, the estimate for the "b" mode). Their sample
covariance ``V`` (divisor ``n - 1``) Studentizes the scaled estimation error

    sqrt(n) * (U * (beta_hat - beta), alpha_hat - alpha, L * (gamma_hat - gamma))

which is asymptotically standard normal in R^3.

Constants that are unknown to the analyst (the intercept, and the error
variance being estimated) only shift a column of ``z`` and so cancel after
centering. ``build_z`` therefore defaults them to zero, which makes the "b"
mode computable from data and the known constants alone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln, ndtri

from .estimators import DEGENERACY_TOLERANCE, EstimateTriple, estimate_from_moments
from .exceptions import BetaNearZero, DegenerateDenominator, ValidationError
from .linalg import RootMode, inv_transpose_sqrt, sym_matrix
from .model import Dataset, IdentifiabilityConfig, MomentStats, Variant, compute_moments

__all__ = [
    "BETA_TOLERANCE",
    "Mode",
    "Scalings",
    "ZRows",
    "StudentizedResult",
    "ConfidenceRegion",
    "scaling_factors",
    "build_z",
    "studentization_matrix",
    "studentized_statistic",
    "multivariate_student_statistic",
    "asymptotic_cov_estimate",
    "studentize",
    "confidence_region",
    "chi2_quantile",
    "chi2_cdf",
    "normal_quantile",
]

BETA_TOLERANCE = 1e-8


class Mode(str, enum.Enum):
    TRUE_BETA = "a"
    PLUG_IN = "b"


@dataclass(frozen=True)
class Scalings:
    U: float
    L: float
    variant: Variant

    def diag(self) -> np.ndarray:
        return np.array([self.U, 1.0, self.L])


@dataclass(frozen=True, eq=False)
class ZRows:
    rows: np.ndarray = field(repr=False)
    variant: Variant
    beta_used: float

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])


def _U(stats: MomentStats, config: IdentifiabilityConfig) -> float:
    v = config.variant
    if v is Variant.A1:
        return 2.0 * stats.S_xy
    if v is Variant.A2:
        return stats.S_xy - config.mu
    return stats.S_xx - config.theta


def scaling_factors(
    stats: MomentStats, config: IdentifiabilityConfig, beta_hat: float, n: int | None = None
) -> Scalings:
    """The scalings ``U(j, n)`` and ``L(j, n)``.

    ``L`` is 1 except under A1, where it is ``(n - 2)(lambda + beta_hat^2) / n``.
    """
    n = stats.n if n is None else int(n)
    if n < 3:
        raise ValidationError("scalings need n >= 3")
    if config.variant is Variant.A1:
        L = (n - 2) * (config.lam + beta_hat * beta_hat) / n
    else:
        L = 1.0
    return Scalings(float(_U(stats, config)), float(L), config.variant)


def _beta_tolerance(stats: MomentStats) -> float:
    ratio = math.sqrt(stats.S_yy / stats.S_xx) if stats.S_xx > 0 else 0.0
    return BETA_TOLERANCE * (1.0 + ratio)


def build_z(
    data: Dataset,
    config: IdentifiabilityConfig,
    beta_value: float,
    *,
    stats: MomentStats | None = None,
    alpha: float = 0.0,
    gamma: float = 0.0,
) -> ZRows:
    """Rows ``z_i = (u_i, v_i, w_i)`` evaluated at slope ``beta_value``.

    ``alpha`` and ``gamma`` stand in for the unknown intercept and unknown
    error variance; any values give the same studentization matrix.
    """
    if stats is None:
        stats = compute_moments(data)
    variant = config.variant
    b = float(beta_value)
    if variant is not Variant.A3:
        tol = _beta_tolerance(stats)
        if abs(b) <= tol:
            raise BetaNearZero(b, tol)
    U = _U(stats, config)
    if abs(U) <= DEGENERACY_TOLERANCE * stats.scale or not math.isfinite(U):
        raise DegenerateDenominator("U(j, n) != 0", U)

    s_xx, s_yy, s_xy = stats.s_i_xx, stats.s_i_yy, stats.s_i_xy
    if variant is Variant.A1:
        lam = config.lam
        lam_theta, mu, theta = lam * gamma, 0.0, gamma
        u = (-2.0 * b * b / (lam + b * b)) * (lam * s_xx - s_yy - (lam - b * b) / b * s_xy)
    elif variant is Variant.A2:
        lam_theta, mu, theta = config.lambda_theta, config.mu, gamma
        u = (s_yy - lam_theta) - b * (s_xy - mu)
    else:
        lam_theta, mu, theta = gamma, config.mu, config.theta
        u = (s_xy - mu) - b * (s_xx - theta)

    v = data.y - alpha - b * data.x - (stats.x_bar / U) * u
    w = (s_yy - lam_theta) - 2.0 * b * (s_xy - mu) + b * b * (s_xx - theta)
    if variant is Variant.A2:
        w = w / (b * b)
    rows = np.column_stack([u, v, w])
    return ZRows(rows, variant, b)


def studentization_matrix(z: ZRows | np.ndarray) -> np.ndarray:
    """Sample covariance of the rows, divisor ``n - 1``, checked positive definite."""
    rows = z.rows if isinstance(z, ZRows) else np.asarray(z, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    n = rows.shape[0]
    if n < 2:
        raise ValidationError("studentization needs at least two rows")
    centered = rows - rows.mean(axis=0)
    V = sym_matrix(centered.T @ centered / (n - 1))
    # raises NotPositiveDefinite for singular V
    inv_transpose_sqrt(V, RootMode.CHOLESKY)
    return V


def studentized_statistic(
    estimates: EstimateTriple,
    truth,
    scalings: Scalings,
    V,
    n: int,
    root_mode: RootMode | str = RootMode.SYMMETRIC,
) -> np.ndarray:
    beta, alpha, gamma = (float(t) for t in truth)
    dev = np.array(
        [
            scalings.U * (estimates.beta_hat - beta),
            estimates.alpha_hat - alpha,
            scalings.L * (estimates.gamma_hat - gamma),
        ]
    )
    return math.sqrt(n) * dev @ inv_transpose_sqrt(V, root_mode)


def multivariate_student_statistic(rows, root_mode: RootMode | str = RootMode.SYMMETRIC) -> np.ndarray:
    """``sqrt(n) * mean(Z) @ V^{-T/2}`` for an ``n x d`` sample."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    n, d = rows.shape
    if n < d + 1:
        raise ValidationError(f"need n >= d + 1 rows, got n={n}, d={d}")
    V = studentization_matrix(rows)
    return math.sqrt(n) * rows.mean(axis=0) @ inv_transpose_sqrt(V, root_mode)


def asymptotic_cov_estimate(V, scalings: Scalings) -> np.ndarray:
    """``D^{-1} V D^{-1}`` with ``D = diag(U, 1, L)``."""
    for name, val in (("U", scalings.U), ("L", scalings.L)):
        if val == 0 or not math.isfinite(val):
            raise DegenerateDenominator(f"{name} != 0", val)
    d_inv = 1.0 / scalings.diag()
    return sym_matrix(np.asarray(V) * np.outer(d_inv, d_inv))


@dataclass(frozen=True, eq=False)
class StudentizedResult:
    estimates: EstimateTriple
    scalings: Scalings
    V: np.ndarray
    T: np.ndarray | None
    mode: Mode
    root_mode: RootMode
    n: int

    def to_dict(self) -> dict:
        return {
            "estimates": self.estimates.to_dict(),
            "scalings": {"U": self.scalings.U, "L": self.scalings.L},
            "studentization_matrix": self.V.tolist(),
            "T": None if self.T is None else self.T.tolist(),
            "mode": self.mode.value,
            "root_mode": self.root_mode.value,
            "n": self.n,
        }


def studentize(
    data: Dataset,
    config: IdentifiabilityConfig,
    *,
    mode: Mode | str = Mode.PLUG_IN,
    truth=None,
    root_mode: RootMode | str = RootMode.SYMMETRIC,
    stats: MomentStats | None = None,
    estimates: EstimateTriple | None = None,
) -> StudentizedResult:
    """Estimate, build the studentizer and (given ``truth``) the statistic.

    Mode "a" builds the studentizer at the true slope and therefore needs
    ``truth = (beta, alpha, gamma)``. Mode "b" plugs in the estimate; ``T``
    is then only computed when ``truth`` (a hypothesized value) is given.
    """
    mode = Mode(mode)
    root_mode = RootMode(root_mode)
    if stats is None:
        stats = compute_moments(data)
    if estimates is None:
        estimates = estimate_from_moments(stats, config)
    if mode is Mode.TRUE_BETA and truth is None:
        raise ValidationError("mode 'a' requires the true parameters")
    beta_for_z = float(truth[0]) if mode is Mode.TRUE_BETA else estimates.beta_hat
    scalings = scaling_factors(stats, config, estimates.beta_hat)
    V = studentization_matrix(build_z(data, config, beta_for_z, stats=stats))
    T = None
    if truth is not None:
        T = studentized_statistic(estimates, truth, scalings, V, data.n, root_mode)
    return StudentizedResult(estimates, scalings, V, T, mode, root_mode, data.n)


@dataclass(frozen=True, eq=False)
class ConfidenceRegion:
    """Ellipsoid ``{p : (p - center) @ shape @ (p - center) <= radius2}`` plus marginal intervals."""

    center: np.ndarray
    shape: np.ndarray
    radius2: float
    level: float
    marginal_intervals: dict[str, tuple[float, float]]

    @property
    def radius(self) -> float:
        return math.sqrt(self.radius2)

    def quadratic_form(self, point) -> float:
        d = np.asarray(point, dtype=float) - self.center
        return float(d @ self.shape @ d)

    def contains(self, point) -> bool:
        return self.quadratic_form(point) <= self.radius2

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "ellipsoid": {
                "center": self.center.tolist(),
                "shape_matrix": self.shape.tolist(),
                "radius_squared": self.radius2,
                "radius": self.radius,
            },
            "marginal_intervals": {k: list(v) for k, v in self.marginal_intervals.items()},
        }


def confidence_region(result: StudentizedResult, level: float) -> ConfidenceRegion:
    if result.mode is not Mode.PLUG_IN:
        raise ValidationError("confidence regions are built from plug-in ('b') results")
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    n = result.n
    D = result.scalings.diag()
    M = inv_transpose_sqrt(result.V, result.root_mode)
    V_inv = M @ M.T
    shape = sym_matrix(n * V_inv * np.outer(D, D))
    center = np.array(result.estimates.as_tuple())
    C = asymptotic_cov_estimate(result.V, result.scalings)
    z = normal_quantile((1.0 + level) / 2.0)
    intervals = {}
    for k, name in enumerate(("beta", "alpha", "gamma")):
        half = z * math.sqrt(C[k, k] / n)
        intervals[name] = (float(center[k] - half), float(center[k] + half))
    return ConfidenceRegion(center, shape, chi2_quantile(3, level), level, intervals)


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValidationError("p must lie in (0, 1)")
    return float(ndtri(p))


def chi2_cdf(x, df: int):
    return gammainc(df / 2.0, np.maximum(np.asarray(x, dtype=float), 0.0) / 2.0)


def chi2_quantile(df: int, p: float) -> float:
    """Quantile of the chi-square law, by safeguarded Newton iteration.

    The CDF is the regularized lower incomplete gamma function; steps that
    would leave the current bracket fall back to bisection.
    """
    if int(df) != df or not 1 <= df <= 20:
        raise ValidationError("df must be an integer in [1, 20]")
    if not 0.0 < p < 1.0:
        raise ValidationError("p must lie in (0, 1)")
    k = df / 2.0
    log_norm = k * math.log(2.0) + float(gammaln(k))

    def cdf(x: float) -> float:
        return float(gammainc(k, x / 2.0))

    lo, hi = 0.0, float(df)
    while cdf(hi) < p:
        lo, hi = hi, 2.0 * hi
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f = cdf(x) - p
        if f == 0.0:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        log_pdf = (k - 1.0) * math.log(x) - x / 2.0 - log_norm
        pdf = math.exp(log_pdf)
        step = f / pdf if pdf > 0 else math.inf
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, x):
            return x_new
        x = x_new
    return x
