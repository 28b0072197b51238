"""Sparse multivariate polynomials and measure-consistent Hermite polynomials.

``H_j`` for a centred Gaussian with precision ``P`` is generated from
``H_0 = 1`` by the raising step

    H_{j + e_i}(x) = (P x)_i H_j(x) - d/dx_i H_j(x),

which is Rodrigues' formula unrolled one derivative at a time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError
from .gaussian import GaussianMeasure
from .indexing import MultiIndex, enumerate_degree, multi_factorial

PRUNE_TOL = 1e-14


class SparsePolynomial:
    """Polynomial in ``dimension`` variables stored as ``{exponent tuple: coefficient}``.

    Coefficients with magnitude below ``PRUNE_TOL`` are dropped on
    construction, so every ring operation returns a pruned result.
    """

    __slots__ = ("dimension", "terms")

    def __init__(self, dimension: int, terms: Mapping[Sequence[int], float] | None = None):
        if dimension < 1:
            raise DimensionError("a polynomial needs at least one variable")
        self.dimension = int(dimension)
        clean: dict[MultiIndex, float] = {}
        for j, c in (terms or {}).items():
            j = tuple(int(v) for v in j)
            if len(j) != self.dimension:
                raise DimensionError(f"exponent {j} has length {len(j)}, expected {self.dimension}")
            c = float(c)
            if abs(c) >= PRUNE_TOL:
                clean[j] = c
        self.terms = clean

    @classmethod
    def constant(cls, dimension: int, value: float = 1.0) -> "SparsePolynomial":
        return cls(dimension, {(0,) * dimension: value})

    @classmethod
    def variable(cls, dimension: int, axis: int) -> "SparsePolynomial":
        return cls(dimension, {tuple(1 if i == axis else 0 for i in range(dimension)): 1.0})

    @property
    def degree(self) -> int:
        return max((sum(j) for j in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, j: Sequence[int]) -> float:
        return self.terms.get(tuple(j), 0.0)

    def _check(self, other: "SparsePolynomial") -> None:
        if self.dimension != other.dimension:
            raise DimensionError(f"dimension mismatch: {self.dimension} vs {other.dimension}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = SparsePolynomial.constant(self.dimension, other)
        return poly_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = SparsePolynomial.constant(self.dimension, other)
        return poly_add(self, poly_scale(other, -1.0))

    def __neg__(self):
        return poly_scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return poly_scale(self, other)
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, value: float):
        return poly_scale(self, 1.0 / value)

    def __call__(self, x):
        return evaluate(self, x)

    def __eq__(self, other):
        return (isinstance(other, SparsePolynomial) and self.dimension == other.dimension
                and self.terms == other.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return f"SparsePolynomial({self.dimension}, 0)"
        body = " + ".join(f"{c:.6g}*x^{j}" for j, c in self.terms.items())
        return f"SparsePolynomial({self.dimension}, {body})"

    def max_abs_diff(self, other: "SparsePolynomial") -> float:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.coefficient(k) - other.coefficient(k)) for k in keys), default=0.0)


def poly_add(p: SparsePolynomial, q: SparsePolynomial) -> SparsePolynomial:
    p._check(q)
    out = dict(p.terms)
    for j, c in q.terms.items():
        out[j] = out.get(j, 0.0) + c
    return SparsePolynomial(p.dimension, out)


def poly_scale(p: SparsePolynomial, s: float) -> SparsePolynomial:
    return SparsePolynomial(p.dimension, {j: s * c for j, c in p.terms.items()})


def poly_mul(p: SparsePolynomial, q: SparsePolynomial) -> SparsePolynomial:
    p._check(q)
    out: dict[MultiIndex, float] = {}
    for j, a in p.terms.items():
        for k, b in q.terms.items():
            key = tuple(x + y for x, y in zip(j, k))
            out[key] = out.get(key, 0.0) + a * b
    return SparsePolynomial(p.dimension, out)


def poly_diff(p: SparsePolynomial, axis: int) -> SparsePolynomial:
    """Formal partial derivative with respect to ``x_axis`` (0-based)."""
    if not 0 <= axis < p.dimension:
        raise DimensionError(f"axis {axis} out of range for dimension {p.dimension}")
    out: dict[MultiIndex, float] = {}
    for j, c in p.terms.items():
        if j[axis]:
            k = list(j)
            k[axis] -= 1
            out[tuple(k)] = c * j[axis]
    return SparsePolynomial(p.dimension, out)


def poly_shift(p: SparsePolynomial, v: Sequence[float]) -> SparsePolynomial:
    """The polynomial ``x -> p(x + v)``."""
    v = [float(t) for t in v]
    if len(v) != p.dimension:
        raise DimensionError("shift vector has wrong length")
    out: dict[MultiIndex, float] = {}
    for j, c in p.terms.items():
        factors = []
        for ji, vi in zip(j, v):
            factors.append([(b, math.comb(ji, b) * vi ** (ji - b)) for b in range(ji + 1)
                            if vi != 0.0 or b == ji])
        for combo in product(*factors):
            key = tuple(b for b, _ in combo)
            w = c
            for _, f in combo:
                w *= f
            out[key] = out.get(key, 0.0) + w
    return SparsePolynomial(p.dimension, out)


def evaluate(p: SparsePolynomial, x) -> float | np.ndarray:
    """Value of ``p`` at a point, or at each row of an ``(n, N)`` array."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.dimension:
        raise DimensionError(f"point has {x.shape[-1]} coordinates, expected {p.dimension}")
    if x.ndim == 1:
        return float(evaluate(p, x[None, :])[0])
    powers = _power_table(x, p.degree)
    out = np.zeros(x.shape[0])
    for j, c in p.terms.items():
        term = np.full(x.shape[0], c)
        for i, e in enumerate(j):
            if e:
                term = term * powers[e][:, i]
        out += term
    return out


def _power_table(x: np.ndarray, deg: int) -> list[np.ndarray]:
    # powers by repeated multiplication, powers[e] = x**e
    table = [np.ones_like(x)]
    for _ in range(deg):
        table.append(table[-1] * x)
    return table


def linear_form(coeffs: Sequence[float]) -> SparsePolynomial:
    n = len(coeffs)
    return SparsePolynomial(n, {tuple(1 if i == k else 0 for i in range(n)): c
                                for k, c in enumerate(coeffs)})


def _raise(h: SparsePolynomial, precision: np.ndarray, axis: int) -> SparsePolynomial:
    return poly_mul(linear_form(precision[axis]), h) - poly_diff(h, axis)


def _parent_axis(j: MultiIndex) -> int:
    # last nonzero axis, so the path from 0 raises axis 1 first
    return max(i for i, v in enumerate(j) if v)


def hermite_polynomial(measure: GaussianMeasure, j: Sequence[int],
                       _cache: dict | None = None) -> SparsePolynomial:
    """Hermite polynomial ``H_j`` for ``measure``."""
    j = tuple(int(v) for v in j)
    n = measure.dimension
    if len(j) != n:
        raise DimensionError(f"index length {len(j)} != dimension {n}")
    cache = {} if _cache is None else _cache
    return _hermite(measure.precision, j, cache)


def _hermite(precision: np.ndarray, j: MultiIndex, cache: dict) -> SparsePolynomial:
    hit = cache.get(j)
    if hit is not None:
        return hit
    if not any(j):
        h = SparsePolynomial.constant(len(j))
    else:
        i = _parent_axis(j)
        parent = list(j)
        parent[i] -= 1
        h = _raise(_hermite(precision, tuple(parent), cache), precision, i)
    cache[j] = h
    return h


def hermite_by_path(measure: GaussianMeasure, path: Sequence[int]) -> SparsePolynomial:
    """Apply the raising step along an explicit sequence of axes, starting from ``H_0``."""
    h = SparsePolynomial.constant(measure.dimension)
    for axis in path:
        h = _raise(h, measure.precision, axis)
    return h


@dataclass(frozen=True)
class BasisEntry:
    index: MultiIndex
    hermite: SparsePolynomial
    norm_sq: float
    psi: SparsePolynomial


@dataclass
class HermiteBasis:
    """Hermite and standardized Hermite polynomials of degree ``0..max_degree``."""

    measure: GaussianMeasure
    max_degree: int
    degrees: list[list[BasisEntry]] = field(default_factory=list)

    def entries(self) -> Iterable[BasisEntry]:
        for level in self.degrees:
            yield from level

    def indices(self, l: int | None = None) -> list[MultiIndex]:
        if l is None:
            return [e.index for e in self.entries()]
        return [e.index for e in self.degrees[l]]

    def psi(self, j: Sequence[int]) -> SparsePolynomial:
        j = tuple(j)
        for e in self.degrees[sum(j)]:
            if e.index == j:
                return e.psi
        raise KeyError(j)

    def psi_values(self, x: np.ndarray, l: int | None = None) -> np.ndarray:
        """Matrix of ``Psi_j(x_k)``; rows are points, columns follow basis order."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        level = self.entries() if l is None else self.degrees[l]
        cols = [evaluate(e.psi, x) for e in level]
        return np.column_stack(cols) if cols else np.zeros((x.shape[0], 0))


def build_basis(measure: GaussianMeasure, m: int) -> HermiteBasis:
    """All ``H_j``, ``E[H_j^2]`` and ``Psi_j = H_j / sqrt(E[H_j^2])`` for ``|j| <= m``."""
    from .moments import norm_sq_H

    if m < 0:
        raise ValueError("order must be non-negative")
    cache: dict = {}
    basis = HermiteBasis(measure, m)
    for l in range(m + 1):
        level = []
        for j in enumerate_degree(measure.dimension, l):
            h = _hermite(measure.precision, j, cache)
            nsq = norm_sq_H(measure, j)
            level.append(BasisEntry(j, h, nsq, poly_scale(h, 1.0 / math.sqrt(nsq))))
        basis.degrees.append(level)
    return basis


def generating_function_partial_sum(measure: GaussianMeasure, t, x, J: int) -> float:
    """Truncated generating series ``sum_{|j| <= J} t^j / j! H_j(x)``."""
    t = np.asarray(t, dtype=float)
    n = measure.dimension
    cache: dict = {}
    total = []
    for l in range(J + 1):
        for j in enumerate_degree(n, l):
            tj = float(np.prod([ti ** ji for ti, ji in zip(t, j)]))
            if tj == 0.0:
                continue
            total.append(tj / multi_factorial(j) * evaluate(_hermite(measure.precision, j, cache), x))
    return math.fsum(total)


# -- serialization ------------------------------------------------------------

def index_label(j: Sequence[int]) -> str:
    return ",".join(str(v) for v in j)


def parse_index_label(label: str) -> MultiIndex:
    return tuple(int(v) for v in label.split(","))


def polynomial_to_dict(p: SparsePolynomial) -> dict[str, float]:
    keys = sorted(p.terms, key=lambda j: (sum(j), tuple(-v for v in j)))
    return {index_label(j): p.terms[j] for j in keys}


def polynomial_from_dict(data: Mapping[str, float], dimension: int | None = None) -> SparsePolynomial:
    terms = {parse_index_label(k): float(v) for k, v in data.items()}
    if dimension is None:
        if not terms:
            raise DimensionError("cannot infer the dimension of an empty polynomial")
        dimension = len(next(iter(terms)))
    return SparsePolynomial(dimension, terms)


def polynomial_to_json(p: SparsePolynomial) -> str:
    return json.dumps(polynomial_to_dict(p))


def polynomial_from_json(text: str, dimension: int | None = None) -> SparsePolynomial:
    return polynomial_from_dict(json.loads(text), dimension)
