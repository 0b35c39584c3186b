"""Small dense linear algebra: determinants, inverses and products.

Matrices and vectors are plain float64 numpy arrays.  The kernels here are
tiny (d is at most a few dozen), so determinant and inverse are computed by
Gaussian elimination with partial pivoting, which also gives a cheap
singularity test through the pivot magnitudes.
"""

from __future__ import annotations

import numpy as np

DEFAULT_REL_TOL = 1e-12


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class SingularMatrixError(ArithmeticError):
    """Elimination met a pivot too small relative to the largest pivot."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def as_vector(x, name: str = "vector") -> np.ndarray:
    a = np.array(x, dtype=np.float64)
    if a.ndim != 1:
        raise DimensionError(f"{name} must be 1-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _square(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def det(m) -> float:
    """Determinant by partially pivoted elimination."""
    a = _square(m).copy()
    n = a.shape[0]
    sign = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0.0:
            return 0.0
        if p != k:
            a[[k, p]] = a[[p, k]]
            sign = -sign
        a[k + 1:, k:] -= np.outer(a[k + 1:, k] / a[k, k], a[k, k:])
    return float(sign * np.prod(np.diag(a)))


def inv(m, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination with partial pivoting.

    Raises SingularMatrixError when the smallest pivot magnitude falls below
    ``rel_tol`` times the largest one.
    """
    a = _square(m)
    n = a.shape[0]
    aug = np.hstack([a, np.eye(n)])
    pivots = np.empty(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        if p != k:
            aug[[k, p]] = aug[[p, k]]
        pivots[k] = abs(aug[k, k])
        if pivots[k] == 0.0:
            raise SingularMatrixError("matrix is singular (zero pivot)")
        aug[k] /= aug[k, k]
        col = aug[:, k].copy()
        col[k] = 0.0
        aug -= np.outer(col, aug[k])
    if pivots.min() < rel_tol * pivots.max():
        raise SingularMatrixError(
            f"matrix is numerically singular: pivot ratio {pivots.min() / pivots.max():.3e} "
            f"< {rel_tol:.1e}"
        )
    return aug[:, n:].copy()


def matvec(m, x) -> np.ndarray:
    a = as_matrix(m)
    v = as_vector(x)
    if a.shape[1] != v.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} matrix by length-{v.shape[0]} vector")
    return a @ v


def batch_det(stack: np.ndarray) -> np.ndarray:
    """Determinants of a (K, d, d) stack, eliminating all K matrices at once."""
    a = np.array(stack, dtype=np.float64)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DimensionError(f"expected a (K, d, d) stack, got shape {a.shape}")
    K, n, _ = a.shape
    rows = np.arange(K)
    sign = np.ones(K)
    for k in range(n):
        p = k + np.argmax(np.abs(a[:, k:, k]), axis=1)
        swap = p != k
        if swap.any():
            r = rows[swap]
            tmp = a[r, k].copy()
            a[r, k] = a[r, p[swap]]
            a[r, p[swap]] = tmp
            sign[swap] = -sign[swap]
        piv = a[:, k, k]
        safe = np.where(piv == 0.0, 1.0, piv)
        f = a[:, k + 1:, k] / safe[:, None]
        a[:, k + 1:, k:] -= f[:, :, None] * a[:, None, k, k:]
    return sign * np.prod(np.diagonal(a, axis1=1, axis2=2), axis=1)


def lambda_min_sym(m) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    a = _square(m)
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])
