"""Synthetic data for structural and functional EIV models.

Random streams come from the counter-based Philox generator keyed by
``(master_seed, replication, stream)``, so each replication's draws do not
depend on execution order or worker count, and the explanatory-variable
stream is disjoint from the error stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .exceptions import ValidationError
from .linalg import cholesky_sqrt, is_positive_definite, sym_matrix
from .model import Dataset, GroundTruth, IdentifiabilityConfig

__all__ = [
    "STREAM_XI",
    "STREAM_ERRORS",
    "stream_rng",
    "ErrorFamily",
    "XiFamily",
    "DesignFamily",
    "Scenario",
    "generate",
    "generate_errors",
    "generate_xi",
    "design_values",
    "generate_noiseless",
]

STREAM_XI = 0
STREAM_ERRORS = 1
_MASK64 = (1 << 64) - 1


def stream_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *keys)``."""
    entropy = [int(seed) & _MASK64, *(int(k) for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream_rng(seed)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


ERROR_KINDS = ("gaussian_correlated", "uniform_independent", "gaussian_plus_discrete")


@dataclass(frozen=True, eq=False)
class ErrorFamily:
    """Distribution of ``(delta, eps)`` with covariance ``gamma_matrix``."""

    kind: str
    gamma_matrix: np.ndarray

    def __post_init__(self) -> None:
        _require(self.kind in ERROR_KINDS, f"unknown error family {self.kind!r}")
        g = sym_matrix(self.gamma_matrix)
        _require(g.shape == (2, 2), "error covariance must be 2x2")
        _require(is_positive_definite(g), "error covariance must be positive definite")
        if self.kind == "uniform_independent":
            _require(g[0, 1] == 0.0, "uniform_independent errors need a diagonal covariance")
        object.__setattr__(self, "gamma_matrix", g)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma_matrix": self.gamma_matrix.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorFamily":
        return cls(d["kind"], d["gamma_matrix"])


XI_KINDS = {
    "normal": ("mean", "var"),
    "uniform": ("low", "high"),
    "pareto_symmetric_tail2": ("center",),
}
DESIGN_KINDS = {
    "equispaced": ("a", "b"),
    "alternating_growth": ("p",),
}


def _params(kind: str, spec: dict[str, tuple[str, ...]], params: dict) -> dict[str, float]:
    wanted = spec[kind]
    extra = set(params) - set(wanted)
    _require(not extra, f"{kind}: unexpected parameters {sorted(extra)}")
    missing = set(wanted) - set(params)
    _require(not missing, f"{kind}: missing parameters {sorted(missing)}")
    return {k: float(params[k]) for k in wanted}


@dataclass(frozen=True)
class XiFamily:
    """I.i.d. law of the explanatory variable in the structural model."""

    kind: str
    params: dict

    def __post_init__(self) -> None:
        _require(self.kind in XI_KINDS, f"unknown explanatory-variable family {self.kind!r}")
        p = _params(self.kind, XI_KINDS, self.params)
        if self.kind == "normal":
            _require(p["var"] > 0, "normal variance must be positive")
        elif self.kind == "uniform":
            _require(p["low"] < p["high"], "uniform needs low < high")
        object.__setattr__(self, "params", p)

    @classmethod
    def normal(cls, mean: float, var: float) -> "XiFamily":
        return cls("normal", {"mean": mean, "var": var})

    @classmethod
    def uniform(cls, low: float, high: float) -> "XiFamily":
        return cls("uniform", {"low": low, "high": high})

    @classmethod
    def pareto_symmetric_tail2(cls, center: float = 0.0) -> "XiFamily":
        return cls("pareto_symmetric_tail2", {"center": center})

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


@dataclass(frozen=True)
class DesignFamily:
    """Deterministic explanatory values for the functional model.

    equispaced: ``xi_i = a + (b - a) * i / n``.
    alternating_growth: ``xi_i = (-1)^i * i^p`` with ``0 < p < 1/2``.
    """

    kind: str
    params: dict

    def __post_init__(self) -> None:
        _require(self.kind in DESIGN_KINDS, f"unknown design family {self.kind!r}")
        p = _params(self.kind, DESIGN_KINDS, self.params)
        if self.kind == "alternating_growth":
            _require(0.0 < p["p"] < 0.5, "alternating_growth needs 0 < p < 1/2")
        else:
            _require(p["a"] != p["b"], "equispaced design needs a != b")
        object.__setattr__(self, "params", p)

    @classmethod
    def equispaced(cls, a: float = 0.0, b: float = 1.0) -> "DesignFamily":
        return cls("equispaced", {"a": a, "b": b})

    @classmethod
    def alternating_growth(cls, p: float = 0.25) -> "DesignFamily":
        return cls("alternating_growth", {"p": p})

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def _xi_from_dict(d: dict) -> XiFamily | DesignFamily:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind in DESIGN_KINDS:
        return DesignFamily(kind, d)
    return XiFamily(kind, d)


@dataclass(frozen=True)
class Scenario:
    model: str
    xi: XiFamily | DesignFamily
    errors: ErrorFamily
    beta: float
    alpha: float
    n: int
    identifiability: IdentifiabilityConfig

    def __post_init__(self) -> None:
        _require(self.model in ("structural", "functional"), f"unknown model {self.model!r}")
        if self.model == "structural":
            _require(isinstance(self.xi, XiFamily), "structural model needs a random explanatory family")
        else:
            _require(isinstance(self.xi, DesignFamily), "functional model needs a deterministic design")
        _require(int(self.n) == self.n and self.n >= 3, "n must be an integer >= 3")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "alpha", float(self.alpha))
        self.identifiability.check_consistent(self.errors.gamma_matrix)

    @property
    def gamma(self) -> float:
        return self.identifiability.true_gamma(self.errors.gamma_matrix)

    def with_variant(self, variant) -> "Scenario":
        """Same data-generating process, analysed under another assumption."""
        config = IdentifiabilityConfig.from_gamma(variant, self.errors.gamma_matrix)
        return Scenario(self.model, self.xi, self.errors, self.beta, self.alpha, self.n, config)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "model": self.model,
            "xi": self.xi.to_dict(),
            "errors": self.errors.to_dict(),
            "beta": self.beta,
            "alpha": self.alpha,
            "n": self.n,
            "identifiability": self.identifiability.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Scenario":
        version = d.get("schema_version", 1)
        _require(version == 1, f"unsupported scenario schema_version {version!r}")
        try:
            return cls(
                model=d["model"],
                xi=_xi_from_dict(d["xi"]),
                errors=ErrorFamily.from_dict(d["errors"]),
                beta=d["beta"],
                alpha=d["alpha"],
                n=d["n"],
                identifiability=IdentifiabilityConfig.from_dict(d["identifiability"]),
            )
        except KeyError as exc:
            raise ValidationError(f"scenario is missing field {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ValidationError(f"malformed scenario: {exc}") from None


def generate_errors(family: ErrorFamily, n: int, seed) -> np.ndarray:
    """``n x 2`` array of i.i.d. mean-zero pairs ``(delta_i, eps_i)``."""
    rng = _as_rng(seed)
    g = family.gamma_matrix
    if family.kind == "gaussian_correlated":
        L = cholesky_sqrt(g)
        return rng.standard_normal((n, 2)) @ L.T
    if family.kind == "uniform_independent":
        half = np.sqrt(3.0 * np.diag(g))
        return rng.uniform(-1.0, 1.0, (n, 2)) * half
    # eps two-point +-sqrt(theta); delta = continuous part + regression on eps
    theta = g[1, 1]
    eps = np.where(rng.random(n) < 0.5, -1.0, 1.0) * math.sqrt(theta)
    resid_var = g[0, 0] - g[0, 1] ** 2 / theta
    delta = (g[0, 1] / theta) * eps + math.sqrt(resid_var) * rng.standard_normal(n)
    return np.column_stack([delta, eps])


def generate_xi(family: XiFamily, n: int, seed) -> np.ndarray:
    rng = _as_rng(seed)
    p = family.params
    if family.kind == "normal":
        return p["mean"] + math.sqrt(p["var"]) * rng.standard_normal(n)
    if family.kind == "uniform":
        return rng.uniform(p["low"], p["high"], n)
    # |xi - center| = U^{-1/2}, U uniform on (0, 1]; P(|xi - center| > t) = t^{-2}
    u = 1.0 - rng.random(n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return p["center"] + sign / np.sqrt(u)


def design_values(design: DesignFamily, n: int) -> np.ndarray:
    i = np.arange(1, n + 1, dtype=float)
    p = design.params
    if design.kind == "equispaced":
        return p["a"] + (p["b"] - p["a"]) * i / n
    sign = np.where(np.arange(1, n + 1) % 2 == 0, 1.0, -1.0)
    return sign * i ** p["p"]


def generate(scenario: Scenario, seed: int, replication: int = 0) -> tuple[Dataset, GroundTruth]:
    if scenario.model == "structural":
        xi = generate_xi(scenario.xi, scenario.n, stream_rng(seed, replication, STREAM_XI))
    else:
        xi = design_values(scenario.xi, scenario.n)
    errors = generate_errors(scenario.errors, scenario.n, stream_rng(seed, replication, STREAM_ERRORS))
    y = scenario.beta * xi + scenario.alpha + errors[:, 0]
    x = xi + errors[:, 1]
    truth = GroundTruth(
        beta=scenario.beta,
        alpha=scenario.alpha,
        gamma=scenario.gamma,
        xi=xi,
        gamma_matrix=scenario.errors.gamma_matrix,
    )
    return Dataset(x, y), truth


def generate_noiseless(beta: float, alpha: float, x) -> Dataset:
    """Points exactly on ``y = beta * x + alpha``."""
    x = np.asarray(x, dtype=float)
    return Dataset(x, beta * x + alpha)
