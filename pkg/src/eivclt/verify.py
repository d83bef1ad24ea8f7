"""Monte Carlo verification of the Studentized CLTs, plus diagnostics.

``run_monte_carlo`` replicates a simulation scenario, Studentizes each
replication both at the true slope (mode "a") and at the estimated slope
(mode "b"), and summarizes the Studentized vectors against N(0, I_3):
chi-square ellipsoid coverage, per-component Kolmogorov-Smirnov tests and
Mardia's multivariate skewness and kurtosis.

``lindeberg_array_experiment`` does the same for the plain multivariate
Student statistic of a heterogeneous triangular array.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.special import gammaincc, ndtr

from .estimators import estimate_from_moments
from .exceptions import StatisticalDegeneracy, TooManyFailures, ValidationError
from .linalg import RootMode
from .model import compute_moments
from .simulate import DesignFamily, Scenario, design_values, generate, stream_rng
from .studentize import (
    build_z,
    chi2_cdf,
    chi2_quantile,
    multivariate_student_statistic,
    scaling_factors,
    studentization_matrix,
    studentized_statistic,
)

__all__ = [
    "MAX_FAILURE_RATE",
    "MardiaResult",
    "ModeSummary",
    "McReport",
    "kolmogorov_sf",
    "ks_statistic",
    "mardia_statistics",
    "obrien_statistic",
    "design_diagnostics",
    "check_design_conditions",
    "summarize",
    "run_monte_carlo",
    "lindeberg_array_experiment",
    "write_vectors_csv",
]

log = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.05


def kolmogorov_sf(t: float) -> float:
    """P(K > t) for the limiting Kolmogorov distribution."""
    if t <= 0:
        return 1.0
    if t < 1.0:
        # theta-function form converges fast for small t
        s = sum(
            math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * t * t)) for k in range(1, 20)
        )
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / t * s))
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1) ** (k - 1) * math.exp(-2.0 * k * k * t * t)
        total += term
        if abs(term) < 1e-18:
            break
    return min(1.0, max(0.0, total))


def ks_statistic(samples, cdf: Callable[[np.ndarray], np.ndarray] = ndtr) -> tuple[float, float]:
    """One-sample KS distance to ``cdf`` (default standard normal) and its asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    if n < 20:
        raise ValidationError("KS test needs at least 20 samples")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    return D, kolmogorov_sf(math.sqrt(n) * D)


@dataclass(frozen=True)
class MardiaResult:
    b1: float
    b2: float
    skewness_stat: float
    skewness_p: float
    kurtosis_z: float
    kurtosis_p: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def mardia_statistics(rows) -> MardiaResult:
    """Mardia's multivariate skewness ``b1`` and kurtosis ``b2``.

    Under normality ``R * b1 / 6`` is asymptotically chi-square with
    ``d(d+1)(d+2)/6`` degrees of freedom and ``b2`` has mean ``d(d+2)``.
    """
    X = np.asarray(rows, dtype=float)
    R, d = X.shape
    if R <= d + 1:
        raise ValidationError("Mardia statistics need more than d + 1 rows")
    C = X - X.mean(axis=0)
    S = C.T @ C / R
    w, q = np.linalg.eigh(S)
    if w[0] <= 1e-12 * np.trace(S):
        raise StatisticalDegeneracy("sample covariance is singular")
    Y = C @ (q / np.sqrt(w))  # whitened rows: Y_i . Y_j = C_i S^{-1} C_j
    # sum_ij (Y_i.Y_j)^3 / R^2 == sum_abc M_abc^2 with M the third-moment tensor
    M = np.einsum("ia,ib,ic->abc", Y, Y, Y) / R
    b1 = float(np.sum(M * M))
    b2 = float(np.mean(np.sum(Y * Y, axis=1) ** 2))
    df = d * (d + 1) * (d + 2) / 6.0
    skew_stat = R * b1 / 6.0
    kurt_z = (b2 - d * (d + 2)) / math.sqrt(8.0 * d * (d + 2) / R)
    return MardiaResult(
        b1=b1,
        b2=b2,
        skewness_stat=skew_stat,
        skewness_p=float(gammaincc(df / 2.0, skew_stat / 2.0)),
        kurtosis_z=float(kurt_z),
        kurtosis_p=float(2.0 * ndtr(-abs(kurt_z))),
    )


def obrien_statistic(values) -> float:
    """``max z_i^2 / sum z_i^2``; tends to zero for samples in the normal domain of attraction."""
    z2 = np.square(np.asarray(values, dtype=float))
    total = float(z2.sum())
    if total == 0.0:
        raise ValidationError("negligibility ratio is undefined for all-zero input")
    return float(z2.max()) / total


def design_diagnostics(xi) -> dict:
    """Mean, mean square and max-share of a deterministic design."""
    xi = np.asarray(xi, dtype=float)
    mean = float(xi.mean())
    mean_sq = float(np.mean(xi * xi))
    spread = mean_sq - mean * mean
    return {
        "n": int(xi.size),
        "mean": mean,
        "mean_square": mean_sq,
        "max_share": obrien_statistic(xi),
        "degenerate": bool(spread <= 1e-12 * max(mean_sq, 1e-300)),
    }


def check_design_conditions(design: DesignFamily, n_grid: Iterable[int]) -> list[dict]:
    """Design diagnostics across ``n_grid``; trends only, no verdict."""
    return [design_diagnostics(design_values(design, int(n))) for n in n_grid]


@dataclass(frozen=True, eq=False)
class ModeSummary:
    """Distributional summary of a sample of Studentized vectors."""

    vectors: np.ndarray = field(repr=False)
    coverage: float
    ks: list[tuple[float, float]]
    ks_norm2: tuple[float, float]
    mardia: MardiaResult

    @property
    def norm2(self) -> np.ndarray:
        return np.sum(self.vectors**2, axis=1)

    def to_dict(self, include_vectors: bool = True) -> dict:
        out = {
            "coverage": self.coverage,
            "ks": [{"D": D, "p": p} for D, p in self.ks],
            "ks_norm2": {"D": self.ks_norm2[0], "p": self.ks_norm2[1]},
            "mardia": self.mardia.to_dict(),
        }
        if include_vectors:
            out["vectors"] = self.vectors.tolist()
        return out


def summarize(vectors: np.ndarray, level: float) -> ModeSummary:
    vectors = np.asarray(vectors, dtype=float)
    d = vectors.shape[1]
    norm2 = np.sum(vectors**2, axis=1)
    radius2 = chi2_quantile(d, level)
    return ModeSummary(
        vectors=vectors,
        coverage=float(np.mean(norm2 <= radius2)),
        ks=[ks_statistic(vectors[:, k]) for k in range(d)],
        ks_norm2=ks_statistic(norm2, cdf=lambda x: chi2_cdf(x, d)),
        mardia=mardia_statistics(vectors),
    )


@dataclass(frozen=True, eq=False)
class McReport:
    kind: str
    description: dict
    R: int
    level: float
    master_seed: int
    root_mode: str
    rep_index: np.ndarray = field(repr=False)
    failures: dict[str, int]
    modes: dict[str, ModeSummary]
    raikov: dict | None = None

    @property
    def successes(self) -> int:
        return int(self.rep_index.size)

    @property
    def failure_rate(self) -> float:
        return sum(self.failures.values()) / self.R

    @property
    def coverage(self) -> dict[str, float]:
        return {m: s.coverage for m, s in self.modes.items()}

    def to_dict(self, include_vectors: bool = True) -> dict:
        out = {
            "schema_version": 1,
            "kind": self.kind,
            "description": self.description,
            "R": self.R,
            "level": self.level,
            "master_seed": self.master_seed,
            "root_mode": self.root_mode,
            "successes": self.successes,
            "failures": dict(sorted(self.failures.items())),
            "failure_rate": self.failure_rate,
            "modes": {m: s.to_dict(include_vectors) for m, s in sorted(self.modes.items())},
            "raikov": self.raikov,
        }
        if include_vectors:
            out["rep_index"] = self.rep_index.tolist()
        return out

    def to_json(self, include_vectors: bool = True) -> str:
        return json.dumps(self.to_dict(include_vectors), indent=2, sort_keys=True, allow_nan=False)


def _replicate(scenario: Scenario, master_seed: int, r: int, root_mode: RootMode):
    """Studentized vectors (mode a, mode b) for replication ``r``."""
    data, truth = generate(scenario, master_seed, r)
    config = scenario.identifiability
    stats = compute_moments(data)
    est = estimate_from_moments(stats, config)
    scal = scaling_factors(stats, config, est.beta_hat)
    target = (truth.beta, truth.alpha, truth.gamma)
    out = []
    for beta_z in (truth.beta, est.beta_hat):
        V = studentization_matrix(build_z(data, config, beta_z, stats=stats))
        out.append(studentized_statistic(est, target, scal, V, data.n, root_mode))
    return out[0], out[1]


def _run_chunk(scenario: Scenario, master_seed: int, reps: list[int], root_mode: RootMode):
    results = []
    for r in reps:
        try:
            ta, tb = _replicate(scenario, master_seed, r, root_mode)
        except StatisticalDegeneracy as exc:
            results.append((r, None, None, type(exc).__name__))
        else:
            results.append((r, ta, tb, None))
    return results


def _chunks(R: int, size: int) -> list[list[int]]:
    return [list(range(s, min(s + size, R))) for s in range(0, R, size)]


def run_monte_carlo(
    scenario: Scenario,
    R: int,
    level: float = 0.95,
    master_seed: int = 0,
    *,
    variant=None,
    root_mode: RootMode | str = RootMode.SYMMETRIC,
    workers: int = 1,
    max_failure_rate: float = MAX_FAILURE_RATE,
) -> McReport:
    """Replicate ``scenario`` ``R`` times and summarize both Studentized vectors.

    ``variant`` re-derives the identifiability constants from the scenario's
    error covariance. Replications whose estimator or Studentizer is
    degenerate are tallied by error type and left out of all summaries; more
    than ``max_failure_rate`` of them aborts the run with TooManyFailures.
    The report depends only on the arguments, not on ``workers``.
    """
    if R < 100:
        raise ValidationError("a Monte Carlo run needs R >= 100")
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    if variant is not None:
        scenario = scenario.with_variant(variant)
    root_mode = RootMode(root_mode)
    workers = max(1, int(workers))

    if workers == 1:
        results = _run_chunk(scenario, master_seed, list(range(R)), root_mode)
    else:
        chunks = _chunks(R, max(1, math.ceil(R / (4 * workers))))
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, scenario, master_seed, c, root_mode) for c in chunks]
            for fut in futures:
                results.extend(fut.result())
    results.sort(key=lambda item: item[0])

    failures: dict[str, int] = {}
    ok = [item for item in results if item[3] is None]
    for item in results:
        if item[3] is not None:
            failures[item[3]] = failures.get(item[3], 0) + 1
    n_fail = R - len(ok)
    if n_fail > max_failure_rate * R:
        raise TooManyFailures(
            f"{n_fail} of {R} replications failed ({failures}); the scenario is likely mis-specified"
        )
    if n_fail:
        log.info("%d of %d replications failed: %s", n_fail, R, failures)

    Ta = np.array([item[1] for item in ok])
    Tb = np.array([item[2] for item in ok])
    description = {
        "scenario": scenario.to_dict(),
        "variant": scenario.identifiability.variant.name,
    }
    return McReport(
        kind="eiv_studentized",
        description=description,
        R=R,
        level=level,
        master_seed=int(master_seed),
        root_mode=root_mode.value,
        rep_index=np.array([item[0] for item in ok], dtype=int),
        failures=failures,
        modes={"a": summarize(Ta, level), "b": summarize(Tb, level)},
    )


def _array_weights(n: int, weights: str) -> np.ndarray:
    if weights == "alternating":
        return np.where(np.arange(1, n + 1) % 2 == 1, 1.0, 3.0)
    if weights == "equal":
        return np.ones(n)
    raise ValidationError(f"unknown weight scheme {weights!r}")


def lindeberg_array_experiment(
    d: int,
    n_grid: Iterable[int],
    R: int,
    master_seed: int = 0,
    *,
    level: float = 0.95,
    weights: str = "alternating",
    root_mode: RootMode | str = RootMode.SYMMETRIC,
) -> list[McReport]:
    """Student statistic of ``Z_i(n) = sqrt(c_i / n) W_i`` for each ``n`` in ``n_grid``.

    ``W_i`` are i.i.d. with independent uniform coordinates on
    ``[-sqrt(3), sqrt(3)]`` (mean 0, covariance I_d). The Raikov residual is
    ``||(n - 1) V - Sigma_n||_F`` with ``Sigma_n = mean(c) I_d`` the summed
    covariance of the row.
    """
    if not 1 <= d <= 5:
        raise ValidationError("dimension must be between 1 and 5")
    root_mode = RootMode(root_mode)
    reports = []
    for n in n_grid:
        n = int(n)
        c = _array_weights(n, weights)
        a = np.sqrt(c / n)[:, None]
        sigma = float(c.mean()) * np.eye(d)
        stats, residuals, scaled = [], [], np.zeros((d, d))
        for r in range(R):
            rng = stream_rng(master_seed, r, n)
            Z = a * rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), (n, d))
            stats.append(multivariate_student_statistic(Z, root_mode))
            C = Z - Z.mean(axis=0)
            SV = C.T @ C
            scaled += SV
            residuals.append(float(np.linalg.norm(SV - sigma)))
        reports.append(
            McReport(
                kind="student_array",
                description={"d": d, "n": n, "weights": weights},
                R=R,
                level=level,
                master_seed=int(master_seed),
                root_mode=root_mode.value,
                rep_index=np.arange(R),
                failures={},
                modes={"student": summarize(np.array(stats), level)},
                raikov={
                    "median_residual": float(np.median(residuals)),
                    "mean_scaled_V": (scaled / R).tolist(),
                    "sigma": sigma.tolist(),
                },
            )
        )
    return reports


def write_vectors_csv(report: McReport, path) -> None:
    """Per-replication vectors: ``rep, mode, T1..Td, norm2``."""
    first = next(iter(report.modes.values()))
    d = first.vectors.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rep", "mode", *(f"T{k + 1}" for k in range(d)), "norm2"])
        for mode, summary in sorted(report.modes.items()):
            for rep, vec, n2 in zip(report.rep_index, summary.vectors, summary.norm2):
                w.writerow([int(rep), mode, *(repr(float(v)) for v in vec), repr(float(n2))])
