"""Small dense symmetric-matrix utilities.

Cholesky and symmetric positive definite square roots, and the inverse
transposed root used to Studentize a vector by a sample covariance matrix.
All routines target tiny matrices (the Studentizers here are 3x3) and are
pure functions of their inputs.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import NotPositiveDefinite, ValidationError

__all__ = [
    "PD_TOLERANCE",
    "MAX_DIM",
    "RootMode",
    "sym_matrix",
    "is_positive_definite",
    "cholesky_sqrt",
    "sym_sqrt",
    "matrix_sqrt",
    "inv_transpose_sqrt",
]

# pivots / eigenvalues at or below PD_TOLERANCE * trace(A) are rejected
PD_TOLERANCE = 1e-12
MAX_DIM = 16
_SYMMETRY_TOL = 1e-10


class RootMode(str, enum.Enum):
    CHOLESKY = "cholesky"
    SYMMETRIC = "symmetric"


def sym_matrix(entries) -> np.ndarray:
    """Return ``entries`` as a float matrix that is exactly symmetric.

    Asymmetry beyond round-off is an error; round-off is removed by mirroring
    the lower triangle onto the upper one.
    """
    a = np.array(entries, dtype=float, ndmin=2)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    scale = max(float(np.max(np.abs(a))), 1.0)
    if np.max(np.abs(a - a.T)) > _SYMMETRY_TOL * scale:
        raise ValidationError("matrix is not symmetric")
    lower = np.tril(a)
    return lower + np.tril(a, -1).T


def _check_dim(a: np.ndarray) -> None:
    if a.shape[0] > MAX_DIM:
        raise ValidationError(f"dimension {a.shape[0]} exceeds MAX_DIM={MAX_DIM}")


def _threshold(a: np.ndarray) -> float:
    return PD_TOLERANCE * float(np.trace(a))


def cholesky_sqrt(a) -> np.ndarray:
    """Lower-triangular ``L`` with positive diagonal and ``L @ L.T == A``."""
    a = sym_matrix(a)
    _check_dim(a)
    d = a.shape[0]
    tol = _threshold(a)
    L = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= tol or not np.isfinite(pivot):
            raise NotPositiveDefinite(
                f"Cholesky pivot {j} = {pivot:.6g} <= {tol:.3g}", value=float(pivot)
            )
        L[j, j] = np.sqrt(pivot)
        for i in range(j + 1, d):
            L[i, j] = (a[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def _eigh_pd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, q = np.linalg.eigh(a)
    tol = _threshold(a)
    if w[0] <= tol or not np.isfinite(w[0]):
        raise NotPositiveDefinite(
            f"minimum eigenvalue {w[0]:.6g} <= {tol:.3g}", value=float(w[0])
        )
    return w, q


def _mirror(s: np.ndarray) -> np.ndarray:
    return np.tril(s) + np.tril(s, -1).T


def sym_sqrt(a) -> np.ndarray:
    """Symmetric positive definite ``S`` with ``S @ S == A``."""
    a = sym_matrix(a)
    _check_dim(a)
    w, q = _eigh_pd(a)
    return _mirror((q * np.sqrt(w)) @ q.T)


def is_positive_definite(a) -> bool:
    try:
        cholesky_sqrt(a)
    except NotPositiveDefinite:
        return False
    return True


def matrix_sqrt(a, mode: RootMode | str = RootMode.SYMMETRIC) -> np.ndarray:
    mode = RootMode(mode)
    return cholesky_sqrt(a) if mode is RootMode.CHOLESKY else sym_sqrt(a)


def inv_transpose_sqrt(a, mode: RootMode | str = RootMode.SYMMETRIC) -> np.ndarray:
    """``A^{-T/2}``, the transpose of the inverse of the chosen square root.

    For a row vector ``x``, ``x @ inv_transpose_sqrt(A)`` has squared norm
    ``x A^{-1} x^T`` under either convention.
    """
    mode = RootMode(mode)
    a = sym_matrix(a)
    _check_dim(a)
    if mode is RootMode.CHOLESKY:
        L = cholesky_sqrt(a)
        inv_L = solve_triangular(L, np.eye(a.shape[0]), lower=True)
        return inv_L.T
    w, q = _eigh_pd(a)
    return _mirror((q / np.sqrt(w)) @ q.T)
