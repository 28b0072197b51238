"""Closed-form second moments of Hermite polynomials and the per-degree Gram matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConditioningError, ConsistencyError, DimensionError
from .gaussian import GaussianMeasure
from .indexing import (
    MultiIndex,
    count_degree,
    enumerate_degree,
    enumerate_margin_matrices,
    matrix_factorial,
    multi_factorial,
)


def _check(measure: GaussianMeasure, *idx: Sequence[int]) -> list[MultiIndex]:
    out = []
    for j in idx:
        j = tuple(int(v) for v in j)
        if len(j) != measure.dimension:
            raise DimensionError(f"index length {len(j)} != dimension {measure.dimension}")
        out.append(j)
    return out


def _theta_sum(precision: np.ndarray, j: MultiIndex, k: MultiIndex) -> float:
    terms = []
    for theta in enumerate_margin_matrices(j, k):
        w = 1.0
        for p, q, v in theta.nonzero():
            w *= precision[p, q] ** v
        terms.append(w / matrix_factorial(theta))
    return math.fsum(terms)


def second_moment_H(measure: GaussianMeasure, j: Sequence[int], k: Sequence[int]) -> float:
    """``E[H_j H_k]``: zero across degrees, else ``j! k!`` times a sum over index matrices.

    The sum runs over non-negative integer matrices ``theta`` with row sums
    ``j`` and column sums ``k`` of ``prod P_pq^theta_pq / theta!``.
    """
    j, k = _check(measure, j, k)
    if sum(j) != sum(k):
        return 0.0
    return multi_factorial(j) * multi_factorial(k) * _theta_sum(measure.precision, j, k)


def norm_sq_H(measure: GaussianMeasure, j: Sequence[int]) -> float:
    """``E[H_j^2]``."""
    (j,) = _check(measure, j)
    value = second_moment_H(measure, j, j)
    if not value > 0.0:
        raise ConsistencyError(f"non-positive norm {value} for index {j}")
    return value


def second_moment_Psi(measure: GaussianMeasure, j: Sequence[int], k: Sequence[int]) -> float:
    j, k = _check(measure, j, k)
    if sum(j) != sum(k):
        return 0.0
    if j == k:
        return 1.0
    return second_moment_H(measure, j, k) / math.sqrt(norm_sq_H(measure, j) * norm_sq_H(measure, k))


@dataclass(frozen=True)
class GramMatrix:
    """Matrix of ``E[Psi_j Psi_k]`` over all indices of one degree, with its Cholesky factor."""

    degree: int
    indices: tuple[MultiIndex, ...]
    entries: np.ndarray
    chol_lower: np.ndarray

    @property
    def order(self) -> int:
        return len(self.indices)

    def condition(self) -> float:
        return float(np.linalg.cond(self.entries))


def gram_matrix(measure: GaussianMeasure, l: int) -> GramMatrix:
    """Assemble and factorize the degree-``l`` Gram matrix.

    Raises :class:`ConditioningError` when the Cholesky factorization fails.
    """
    if l < 0:
        raise ValueError("degree must be non-negative")
    idx = enumerate_degree(measure.dimension, l)
    n = len(idx)
    if n != count_degree(measure.dimension, l):
        raise ConsistencyError("degree enumeration size mismatch")
    h = np.empty((n, n))
    for p in range(n):
        for q in range(p, n):
            h[p, q] = h[q, p] = second_moment_H(measure, idx[p], idx[q])
    d = np.sqrt(np.diag(h))
    a = h / np.outer(d, d)
    np.fill_diagonal(a, 1.0)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ConditioningError(
            f"Gram matrix of degree {l} is not positive-definite "
            f"(condition estimate {np.linalg.cond(a):.3g})") from None
    a.setflags(write=False)
    chol.setflags(write=False)
    return GramMatrix(l, idx, a, chol)
