"""Core domain types: datasets, identifiability configurations, moments."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import ValidationError
from .linalg import is_positive_definite, sym_matrix

__all__ = [
    "Variant",
    "Dataset",
    "GroundTruth",
    "IdentifiabilityConfig",
    "MomentStats",
    "compute_moments",
    "read_csv",
    "write_csv",
]

MIN_OBSERVATIONS = 3


class Variant(enum.IntEnum):
    """Which identifiability assumption holds.

    A1: variance ratio lambda known, error covariance zero.
    A2: Var(delta) = lambda*theta and cov mu known, theta unknown.
    A3: Var(eps) = theta and cov mu known, lambda*theta unknown.
    """

    A1 = 1
    A2 = 2
    A3 = 3

    @classmethod
    def parse(cls, value: Any) -> "Variant":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            if key in cls.__members__:
                return cls[key]
            if key.isdigit():
                value = int(key)
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            raise ValidationError(f"unknown identifiability variant {value!r}") from None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed pairs ``(x_i, y_i)``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValidationError(f"x and y differ in length ({x.size} vs {y.size})")
        if x.size < MIN_OBSERVATIONS:
            raise ValidationError(f"need at least {MIN_OBSERVATIONS} observations, got {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("dataset contains non-finite values")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.size)

    def swapped(self) -> "Dataset":
        return Dataset(self.y, self.x)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    beta: float
    alpha: float
    gamma: float
    xi: np.ndarray
    gamma_matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValidationError("true error variance must be non-negative")
        gm = sym_matrix(self.gamma_matrix)
        if gm.shape != (2, 2) or not is_positive_definite(gm):
            raise ValidationError("error covariance matrix must be a 2x2 positive definite matrix")
        object.__setattr__(self, "gamma_matrix", gm)

    def to_dict(self, include_xi: bool = False) -> dict:
        out = {
            "beta": float(self.beta),
            "alpha": float(self.alpha),
            "gamma": float(self.gamma),
            "gamma_matrix": self.gamma_matrix.tolist(),
        }
        if include_xi:
            out["xi"] = [float(v) for v in self.xi]
        return out


_VARIANT_FIELDS = {
    Variant.A1: ("lam",),
    Variant.A2: ("lambda_theta", "mu"),
    Variant.A3: ("theta", "mu"),
}


@dataclass(frozen=True)
class IdentifiabilityConfig:
    """The known error-moment constants for one identifiability assumption.

    Only the fields belonging to ``variant`` may be set. Under A1 the error
    covariance is zero by assumption and is not a field.
    """

    variant: Variant
    lam: float | None = None
    lambda_theta: float | None = None
    theta: float | None = None
    mu: float | None = None

    def __post_init__(self) -> None:
        variant = Variant.parse(self.variant)
        object.__setattr__(self, "variant", variant)
        wanted = _VARIANT_FIELDS[variant]
        for name in ("lam", "lambda_theta", "theta", "mu"):
            value = getattr(self, name)
            if name in wanted:
                if value is None:
                    raise ValidationError(f"variant {variant.name} requires '{name}'")
                value = float(value)
                if not math.isfinite(value):
                    raise ValidationError(f"'{name}' must be finite")
                object.__setattr__(self, name, value)
            elif value is not None:
                raise ValidationError(f"'{name}' is not a parameter of variant {variant.name}")
        if variant is Variant.A1 and self.lam <= 0:
            raise ValidationError("lambda must be positive")
        if variant is Variant.A2 and self.lambda_theta < 0:
            raise ValidationError("lambda_theta must be non-negative")
        if variant is Variant.A3 and self.theta < 0:
            raise ValidationError("theta must be non-negative")

    @classmethod
    def a1(cls, lam: float) -> "IdentifiabilityConfig":
        return cls(Variant.A1, lam=lam)

    @classmethod
    def a2(cls, lambda_theta: float, mu: float = 0.0) -> "IdentifiabilityConfig":
        return cls(Variant.A2, lambda_theta=lambda_theta, mu=mu)

    @classmethod
    def a3(cls, theta: float, mu: float = 0.0) -> "IdentifiabilityConfig":
        return cls(Variant.A3, theta=theta, mu=mu)

    @classmethod
    def from_gamma(cls, variant, gamma_matrix, rtol: float = 1e-12) -> "IdentifiabilityConfig":
        """Known constants implied by an error covariance ``[[lam*theta, mu], [mu, theta]]``."""
        g = sym_matrix(gamma_matrix)
        variant = Variant.parse(variant)
        if variant is Variant.A1:
            if abs(g[0, 1]) > rtol * (g[0, 0] + g[1, 1]):
                raise ValidationError(
                    "variant A1 assumes uncorrelated errors but the error covariance is "
                    f"{g[0, 1]!r}"
                )
            return cls.a1(g[0, 0] / g[1, 1])
        if variant is Variant.A2:
            return cls.a2(g[0, 0], g[0, 1])
        return cls.a3(g[1, 1], g[0, 1])

    @property
    def cov(self) -> float:
        """Error covariance mu (zero under A1)."""
        return 0.0 if self.variant is Variant.A1 else float(self.mu)

    def true_gamma(self, gamma_matrix) -> float:
        """The unknown error variance this variant estimates."""
        g = np.asarray(gamma_matrix, dtype=float)
        return float(g[0, 0] if self.variant is Variant.A3 else g[1, 1])

    def check_consistent(self, gamma_matrix, rtol: float = 1e-9) -> None:
        """Raise ValidationError unless the constants agree with ``gamma_matrix``."""
        expected = IdentifiabilityConfig.from_gamma(self.variant, gamma_matrix)
        for name in _VARIANT_FIELDS[self.variant]:
            got, want = getattr(self, name), getattr(expected, name)
            if abs(got - want) > rtol * max(1.0, abs(want)):
                raise ValidationError(
                    f"identifiability constant {name}={got!r} is inconsistent with the "
                    f"error covariance (implies {want!r})"
                )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"variant": self.variant.name}
        for name in _VARIANT_FIELDS[self.variant]:
            out[name] = getattr(self, name)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "IdentifiabilityConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        unknown = set(data) - {"variant", "lam", "lambda_theta", "theta", "mu"}
        if unknown:
            raise ValidationError(f"unknown identifiability fields: {sorted(unknown)}")
        if "variant" not in data:
            raise ValidationError("identifiability config needs a 'variant'")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class MomentStats:
    """Sample means and centered second moments (divisor n)."""

    x_bar: float
    y_bar: float
    S_xx: float
    S_yy: float
    S_xy: float
    s_i_xx: np.ndarray = field(repr=False)
    s_i_yy: np.ndarray = field(repr=False)
    s_i_xy: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.s_i_xx.size)

    @property
    def scale(self) -> float:
        return self.S_xx + self.S_yy


def compute_moments(data: Dataset) -> MomentStats:
    dx = data.x - data.x.mean()
    dy = data.y - data.y.mean()
    s_xx, s_yy, s_xy = dx * dx, dy * dy, dx * dy
    return MomentStats(
        x_bar=float(data.x.mean()),
        y_bar=float(data.y.mean()),
        S_xx=float(s_xx.mean()),
        S_yy=float(s_yy.mean()),
        S_xy=float(s_xy.mean()),
        s_i_xx=s_xx,
        s_i_yy=s_yy,
        s_i_xy=s_xy,
    )


def read_csv(path: str | Path) -> Dataset:
    """Read a dataset from a CSV file with header ``x,y``.

    Errors name the offending line (1-based, header is line 1).
    """
    xs: list[float] = []
    ys: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        if [h.strip().lower() for h in header] != ["x", "y"]:
            raise ValidationError(f"{path}: line 1: expected header 'x,y', got {','.join(header)!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}: line {line}: expected 2 fields, got {len(row)}")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                raise ValidationError(f"{path}: line {line}: cannot parse {','.join(row)!r}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValidationError(f"{path}: line {line}: non-finite value")
            xs.append(x)
            ys.append(y)
    return Dataset(np.array(xs), np.array(ys))


def write_csv(data: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for x, y in zip(data.x, data.y):
            fh.write(f"{float(x)!r},{float(y)!r}\n")
