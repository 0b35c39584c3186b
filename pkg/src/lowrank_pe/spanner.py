"""Barycentric spanners of kernel rows.

A spanner is a set of d rows ``V`` of the N x d kernel such that every row
``u_i`` equals ``w_i @ V`` with ``|w_i|_inf <= C``.  ``exact_spanner`` finds
the maximum-|det| subset (C = 1); ``approx_spanner`` runs the swap scheme,
which stops once no single-row swap grows |det| by more than a factor C.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .matcore import DEFAULT_REL_TOL, as_matrix, batch_det, det, inv

DEFAULT_BUDGET = 2_000_000
DEFAULT_C = 2.0
_CHUNK = 65_536
_TIE_RTOL = 1e-12


class RankError(ValueError):
    """Kernel rows do not span R^d."""


class BudgetError(RuntimeError):
    """Exhaustive search would exceed the subset budget."""


@dataclass(frozen=True, eq=False)
class SpannerBasis:
    indices: tuple[int, ...]
    V: np.ndarray
    V_inv: np.ndarray
    C: float = 1.0
    swaps: int = 0

    @property
    def d(self) -> int:
        return len(self.indices)

    @property
    def absdet(self) -> float:
        return abs(det(self.V))


def basis_from_indices(U, indices, C: float = 1.0, swaps: int = 0) -> SpannerBasis:
    U = as_matrix(U, "kernel")
    idx = tuple(int(i) for i in indices)
    V = U[list(idx)].copy()
    return SpannerBasis(idx, V, inv(V), float(C), swaps)


def greedy_pivot_rows(U, rel_tol: float = DEFAULT_REL_TOL) -> list[int]:
    """Pick d linearly independent rows by elimination with row pivoting."""
    U = as_matrix(U, "kernel")
    N, d = U.shape
    if N < d:
        raise RankError(f"{N} rows cannot span R^{d}")
    R = U.copy()
    free = np.ones(N, dtype=bool)
    chosen: list[int] = []
    scale = np.abs(U).max()
    for k in range(d):
        col = np.where(free, np.abs(R[:, k]), -1.0)
        p = int(np.argmax(col))
        if scale == 0.0 or col[p] <= rel_tol * scale:
            raise RankError(f"kernel has rank {k} < {d}")
        chosen.append(p)
        free[p] = False
        R -= np.outer(R[:, k] / R[p, k], R[p])
        R[p] = 0.0
    return chosen


def exact_spanner(U, budget: int = DEFAULT_BUDGET) -> SpannerBasis:
    """Max-|det| subset of d rows; ties go to the lexicographically smallest subset."""
    U = as_matrix(U, "kernel")
    N, d = U.shape
    greedy_pivot_rows(U)  # rank check
    total = comb(N, d)
    if total > budget:
        raise BudgetError(f"C({N},{d}) = {total} subsets exceeds the budget of {budget}")
    best_val = -1.0
    best_idx: tuple[int, ...] | None = None
    combos = itertools.combinations(range(N), d)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        vals = np.abs(batch_det(U[chunk]))
        j = int(np.argmax(vals))
        # strictly better only: earlier chunks hold lexicographically smaller subsets
        if vals[j] > best_val * (1 + _TIE_RTOL):
            cand = np.flatnonzero(vals >= vals[j] * (1 - _TIE_RTOL))
            best_val = float(vals[j])
            best_idx = tuple(int(i) for i in chunk[cand[0]])
    assert best_idx is not None
    return basis_from_indices(U, best_idx, 1.0)


def approx_spanner(U, C: float = DEFAULT_C, max_swaps: int = 100_000) -> SpannerBasis:
    """C-approximate spanner by iterated determinant-increasing swaps."""
    if not C > 1.0:
        raise ValueError(f"approximation factor must exceed 1, got {C}")
    U = as_matrix(U, "kernel")
    idx = greedy_pivot_rows(U)
    swaps = 0
    while True:
        V_inv = inv(U[idx])
        # replacing basis row j by u_i scales |det| by |w_i[j]| where w_i = u_i V^-1
        W = U @ V_inv
        i, j = np.unravel_index(int(np.argmax(np.abs(W))), W.shape)
        if abs(W[i, j]) <= C:
            break
        idx[j] = int(i)
        swaps += 1
        if swaps > max_swaps:
            raise RuntimeError("swap limit reached without convergence")
    return basis_from_indices(U, idx, C, swaps)


def coefficients(U, basis: SpannerBasis) -> np.ndarray:
    """Row i holds w_i with u_i = w_i @ V; spanner rows get exact unit vectors."""
    U = as_matrix(U, "kernel")
    W = U @ basis.V_inv
    for j, i in enumerate(basis.indices):
        W[i] = 0.0
        W[i, j] = 1.0
    return W


def max_coefficient(U, basis: SpannerBasis, exclude_basis: bool = False) -> float:
    """Largest |w| entry; basis rows (always exactly 1) can be left out."""
    W = np.abs(coefficients(U, basis))
    if exclude_basis:
        keep = np.ones(W.shape[0], dtype=bool)
        keep[list(basis.indices)] = False
        if not keep.any():
            return 1.0
        W = W[keep]
    return float(W.max())
