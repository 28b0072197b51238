"""Multi-indices, graded lexicographic order and margin-constrained index matrices.

Multi-indices are plain tuples of non-negative ints.  Within a fixed total
degree the canonical order puts the lexicographically largest index first,
so for ``N = 3, l = 2`` the ranks run ``(2,0,0), (1,1,0), (1,0,1), (0,2,0),
(0,1,1), (0,0,2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import DimensionError, RangeError

MultiIndex = tuple[int, ...]

INT64_MAX = 2**63 - 1


def _checked(value: int) -> int:
    if value > INT64_MAX:
        raise RangeError(f"count {value} exceeds 64-bit capacity")
    return value


def as_index(j: Sequence[int]) -> MultiIndex:
    """Validate and freeze a multi-index."""
    idx = tuple(int(v) for v in j)
    if len(idx) == 0:
        raise DimensionError("a multi-index needs at least one entry")
    if any(v < 0 for v in idx):
        raise ValueError(f"negative entry in multi-index {idx}")
    return idx


def degree(j: Sequence[int]) -> int:
    return sum(j)


def unit(n: int, axis: int) -> MultiIndex:
    return tuple(1 if i == axis else 0 for i in range(n))


def grlex_compare(a: Sequence[int], b: Sequence[int]) -> int:
    """Compare two multi-indices in graded lexicographic order.

    Returns -1, 0 or 1 for ``a < b``, ``a == b`` and ``a > b``.  Higher total
    degree is greater; at equal degree the leftmost nonzero entry of
    ``a - b`` decides.
    """
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")
    da, db = sum(a), sum(b)
    if da != db:
        return 1 if da > db else -1
    for x, y in zip(a, b):
        if x != y:
            return 1 if x > y else -1
    return 0


def _compositions(total: int, parts: int) -> Iterator[MultiIndex]:
    # lexicographically descending: first entry as large as possible
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_degree(n: int, l: int) -> tuple[MultiIndex, ...]:
    """All multi-indices of length ``n`` and total degree ``l``, in rank order."""
    if n < 1:
        raise DimensionError("dimension must be at least 1")
    if l < 0:
        raise ValueError("degree must be non-negative")
    return tuple(_compositions(l, n))


def enumerate_total(n: int, m: int) -> list[MultiIndex]:
    """All multi-indices with total degree at most ``m``, degree by degree."""
    out: list[MultiIndex] = []
    for l in range(m + 1):
        out.extend(enumerate_degree(n, l))
    return out


def count_degree(n: int, l: int) -> int:
    """Number of multi-indices of length ``n`` with total degree ``l``."""
    if n < 1:
        raise DimensionError("dimension must be at least 1")
    if l < 0:
        raise ValueError("degree must be non-negative")
    return _checked(math.comb(n + l - 1, l))


def count_total(n: int, m: int) -> int:
    """Number of multi-indices of length ``n`` with total degree at most ``m``."""
    if n < 1:
        raise DimensionError("dimension must be at least 1")
    if m < 0:
        raise ValueError("order must be non-negative")
    return _checked(math.comb(n + m, m))


def multi_factorial(j: Sequence[int]) -> int:
    """Product of the factorials of the entries."""
    out = 1
    for v in j:
        out = _checked(out * math.factorial(v))
    return out


@dataclass(frozen=True)
class IndexMatrix:
    """Square non-negative integer matrix together with its margins."""

    entries: tuple[tuple[int, ...], ...]
    row_sums: MultiIndex
    col_sums: MultiIndex

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IndexMatrix":
        entries = tuple(tuple(int(v) for v in r) for r in rows)
        n = len(entries)
        if any(len(r) != n for r in entries):
            raise DimensionError("index matrix must be square")
        rs = tuple(sum(r) for r in entries)
        cs = tuple(sum(entries[p][q] for p in range(n)) for q in range(n))
        return cls(entries, rs, cs)

    @property
    def size(self) -> int:
        return len(self.entries)

    def nonzero(self) -> Iterator[tuple[int, int, int]]:
        for p, row in enumerate(self.entries):
            for q, v in enumerate(row):
                if v:
                    yield p, q, v


def matrix_factorial(theta: IndexMatrix) -> int:
    """Product of the factorials of all entries of ``theta``."""
    out = 1
    for row in theta.entries:
        for v in row:
            out = _checked(out * math.factorial(v))
    return out


def _bounded_compositions(total: int, caps: Sequence[int]) -> Iterator[MultiIndex]:
    # ascending lexicographic order, entry q limited by caps[q]
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    tail_cap = sum(caps[1:])
    lo = max(0, total - tail_cap)
    for first in range(lo, min(total, caps[0]) + 1):
        for rest in _bounded_compositions(total - first, caps[1:]):
            yield (first,) + rest


def enumerate_margin_matrices(j: Sequence[int], k: Sequence[int]) -> list[IndexMatrix]:
    """Every square non-negative integer matrix with row sums ``j`` and column sums ``k``.

    Rows are filled one at a time from the compositions of ``j[p]`` that fit in
    the remaining column budget, so the result comes out in ascending
    row-major lexicographic order.  Returns an empty list when the totals differ.
    """
    if len(j) != len(k):
        raise DimensionError(f"length mismatch: {len(j)} vs {len(k)}")
    if sum(j) != sum(k):
        return []
    n = len(j)
    out: list[IndexMatrix] = []
    rows: list[MultiIndex] = []

    def fill(p: int, budget: tuple[int, ...]) -> None:
        if p == n - 1:
            # last row is forced by the remaining column budget
            if sum(budget) == j[p]:
                rows.append(budget)
                out.append(IndexMatrix(tuple(rows), tuple(j), tuple(k)))
                rows.pop()
            return
        for row in _bounded_compositions(j[p], budget):
            rows.append(row)
            fill(p + 1, tuple(b - r for b, r in zip(budget, row)))
            rows.pop()

    fill(0, tuple(int(v) for v in k))
    return out
