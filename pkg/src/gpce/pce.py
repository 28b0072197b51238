"""Generalized Wiener-Hermite expansion: coefficient solves, statistics and sampling."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConditioningError, DimensionError, DomainError, EvaluationError, GpceError
from .gaussian import (
    GaussianMeasure,
    QmcConfig,
    gaussian_map,
    make_measure,
    polynomial_expectation,
    random_gaussian,
    sobol_points,
)
from .hermite import (
    HermiteBasis,
    SparsePolynomial,
    build_basis,
    evaluate,
    index_label,
    parse_index_label,
    poly_mul,
    poly_shift,
)
from .indexing import MultiIndex, count_total, enumerate_total
from .moments import GramMatrix, gram_matrix

RESIDUAL_RTOL = 1e-8
MAX_HISTOGRAM_BINS = 512


# -- output functions ---------------------------------------------------------

class OutputFunction:
    """Deterministic map from R^N to R that a PCE approximates.

    Subclasses evaluate batches of points (rows of an ``(n, N)`` array).
    ``serial`` declares that the function must not be called concurrently.
    """

    dimension: int
    serial: bool = True

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(self.evaluate(x[None, :])[0])
        return self.evaluate(x)

    def expectation_times(self, measure: GaussianMeasure, q: SparsePolynomial) -> float:
        """Exact ``E[y(X) q(X)]``; only closed-form output types implement it."""
        raise GpceError(f"{type(self).__name__} has no closed-form expectations; use the QMC method")

    @property
    def exact(self) -> bool:
        return False


class PolynomialOutput(OutputFunction):
    def __init__(self, poly: SparsePolynomial):
        self.poly = poly
        self.dimension = poly.dimension
        self.serial = False

    def evaluate(self, x):
        return evaluate(self.poly, x)

    def expectation_times(self, measure, q):
        return polynomial_expectation(measure, poly_mul(self.poly, q))

    @property
    def exact(self) -> bool:
        return True


class ExpPolynomialOutput(OutputFunction):
    """``y(x) = sum_r p_r(x) exp(s_r . x)``.

    Expectations against polynomials are exact through the Gaussian shift
    ``E[p(X) e^{s.X}] = e^{s.S s / 2} E[p(X + S s)]``.
    """

    def __init__(self, terms: Sequence[tuple[SparsePolynomial, Sequence[float]]]):
        if not terms:
            raise ValueError("need at least one term")
        self.dimension = terms[0][0].dimension
        self.terms = []
        for p, s in terms:
            s = np.asarray(s, dtype=float)
            if p.dimension != self.dimension or s.shape != (self.dimension,):
                raise DimensionError("inconsistent term dimensions")
            self.terms.append((p, s))
        self.serial = False

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[0])
        for p, s in self.terms:
            out += evaluate(p, x) * np.exp(x @ s)
        return out

    def expectation_times(self, measure, q):
        parts = []
        for p, s in self.terms:
            shift = measure.covariance @ s
            scale = math.exp(0.5 * float(s @ shift))
            parts.append(scale * polynomial_expectation(measure, poly_shift(poly_mul(p, q), shift)))
        return math.fsum(parts)

    @property
    def exact(self) -> bool:
        return True


class CallableOutput(OutputFunction):
    """Wraps a host-supplied function of one point (or of a batch if ``vectorized``)."""

    def __init__(self, fn: Callable, dimension: int, vectorized: bool = False, serial: bool = True):
        self.fn = fn
        self.dimension = dimension
        self.vectorized = vectorized
        self.serial = serial

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.vectorized:
            return np.asarray(self.fn(x), dtype=float).reshape(x.shape[0])
        return np.array([float(self.fn(row)) for row in x])


def as_output(y, dimension: int | None = None) -> OutputFunction:
    if isinstance(y, OutputFunction):
        return y
    if isinstance(y, SparsePolynomial):
        return PolynomialOutput(y)
    if callable(y):
        if dimension is None:
            raise ValueError("dimension required for a plain callable output")
        return CallableOutput(y, dimension)
    raise TypeError(f"cannot use {type(y).__name__} as an output function")


# -- right-hand sides and solves ---------------------------------------------

def rhs_exact(measure: GaussianMeasure, basis: HermiteBasis, y, l: int) -> np.ndarray:
    """``b_p = E[y Psi_{j_p}]`` over the degree-``l`` indices, in closed form."""
    y = as_output(y)
    if y.dimension != measure.dimension:
        raise DimensionError("output and measure dimensions differ")
    return np.array([y.expectation_times(measure, e.psi) for e in basis.degrees[l]])


@dataclass(frozen=True)
class QmcSample:
    points: np.ndarray
    values: np.ndarray


def qmc_sample(measure: GaussianMeasure, y, config: QmcConfig) -> QmcSample:
    """Map Sobol points to the measure and evaluate ``y`` once on each."""
    y = as_output(y, measure.dimension)
    if config.dimension != measure.dimension:
        raise DimensionError(f"QMC dimension {config.dimension} != {measure.dimension}")
    x = gaussian_map(measure, sobol_points(config))
    vals = np.asarray(y.evaluate(x), dtype=float)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise EvaluationError(f"output is not finite at sample {int(bad[0])}", int(bad[0]))
    return QmcSample(x, vals)


def rhs_qmc(measure: GaussianMeasure, basis: HermiteBasis, y, l: int,
            config: QmcConfig, sample: QmcSample | None = None,
            center: bool = True) -> np.ndarray:
    """Sample-mean estimate of ``E[y Psi_j]`` for ``|j| = l`` over Sobol-mapped points.

    With ``center`` (the default) the sample mean of ``y`` is subtracted
    before averaging when ``l >= 1``.  Because ``E[Psi_j] = 0`` for those
    degrees the target is unchanged, but the large constant part of ``y`` no
    longer leaks into the higher coefficients through the QMC error of
    ``mean(Psi_j)``.
    """
    if sample is None:
        sample = qmc_sample(measure, y, config)
    vals = sample.values
    if center and l >= 1:
        vals = vals - vals.mean()
    psi = basis.psi_values(sample.points, l)
    return psi.T @ vals / vals.shape[0]


def solve_degree(gram: GramMatrix, b) -> tuple[np.ndarray, float]:
    """Solve ``A_l c = b`` with the cached Cholesky factor; returns ``(c, residual)``."""
    from scipy.linalg import cho_solve

    b = np.asarray(b, dtype=float)
    if b.shape != (gram.order,):
        raise DimensionError(f"right-hand side has shape {b.shape}, expected ({gram.order},)")
    c = cho_solve((gram.chol_lower, True), b)
    residual = float(np.max(np.abs(gram.entries @ c - b))) if b.size else 0.0
    bound = RESIDUAL_RTOL * (1.0 + float(np.max(np.abs(b), initial=0.0)))
    if not residual <= bound:
        raise ConditioningError(f"degree {gram.degree} solve residual {residual:.3g} exceeds {bound:.3g}")
    return c, residual


# -- the model ----------------------------------------------------------------

@dataclass
class PceModel:
    """Truncated expansion ``sum_{|j| <= m} C_j Psi_j``."""

    measure: GaussianMeasure
    order: int
    coefficients: dict[MultiIndex, float]
    build_meta: dict = field(default_factory=dict)
    _basis: HermiteBasis | None = None
    _grams: list[GramMatrix] | None = None

    @property
    def dimension(self) -> int:
        return self.measure.dimension

    @property
    def basis(self) -> HermiteBasis:
        if self._basis is None:
            self._basis = build_basis(self.measure, self.order)
        return self._basis

    @property
    def grams(self) -> list[GramMatrix]:
        if self._grams is None:
            self._grams = [gram_matrix(self.measure, l) for l in range(self.order + 1)]
        return self._grams

    def coefficient_vector(self, l: int | None = None) -> np.ndarray:
        if l is None:
            return np.array(list(self.coefficients.values()))
        return np.array([self.coefficients[j] for j in self.basis.indices(l)])


def build_pce(measure: GaussianMeasure, y, m: int, method: str | QmcConfig = "exact",
              center: bool = True) -> PceModel:
    """Build the order-``m`` expansion, one independent Gram solve per degree.

    ``method`` is ``"exact"`` (closed-form right-hand sides; needs a polynomial
    or exp-polynomial output) or a :class:`QmcConfig`.  ``center`` selects the
    mean-centred QMC estimator (see :func:`rhs_qmc`); it has no effect on the
    exact path.
    """
    if m < 0:
        raise ValueError("order must be non-negative")
    y = as_output(y, measure.dimension)
    if y.dimension != measure.dimension:
        raise DimensionError("output and measure dimensions differ")
    if method == "exact":
        if not y.exact:
            raise GpceError("the exact method needs an output with closed-form expectations")
        sample = None
        meta = {"method": "exact", "qmc_size": None}
    elif isinstance(method, QmcConfig):
        sample = qmc_sample(measure, y, method)
        meta = {"method": "qmc", "qmc_size": method.sample_count, "skip": method.skip,
                "centered": bool(center)}
    else:
        raise ValueError(f"unknown method {method!r}")
    basis = build_basis(measure, m)
    grams = []
    coeffs: dict[MultiIndex, float] = {}
    residuals = []
    for l in range(m + 1):
        try:
            gram = gram_matrix(measure, l)
            if sample is None:
                b = rhs_exact(measure, basis, y, l)
            else:
                b = rhs_qmc(measure, basis, y, l, method, sample, center)
            c, res = solve_degree(gram, b)
        except GpceError as exc:
            raise type(exc)(f"degree {l}: {exc}") from exc
        grams.append(gram)
        residuals.append(res)
        coeffs.update(zip(gram.indices, (float(v) for v in c)))
    meta["residuals"] = residuals
    return PceModel(measure, m, coeffs, meta, basis, grams)


# -- statistics -----------------------------------------------------------------

@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    contributions: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance,
                "contributions": list(self.contributions)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        rows = ["quantity,value", f"mean,{self.mean!r}", f"variance,{self.variance!r}"]
        rows += [f"variance_degree_{l},{v!r}" for l, v in enumerate(self.contributions, start=1)]
        return "\n".join(rows) + "\n"


def mean(model: PceModel) -> float:
    return model.coefficients[(0,) * model.dimension]


def variance(model: PceModel) -> MomentReport:
    """Variance of the truncated expansion, split by degree.

    Degree ``l`` contributes ``c_l^T A_l c_l``: the squared coefficients plus
    the same-degree cross terms weighted by ``E[Psi_j Psi_k]``.
    """
    contrib = []
    for l in range(1, model.order + 1):
        c = model.coefficient_vector(l)
        a = model.grams[l].entries
        parts = [c[p] * c[p] for p in range(len(c))]
        for p in range(len(c)):
            for q in range(len(c)):
                if p != q and a[p, q] != 0.0:
                    parts.append(c[p] * c[q] * a[p, q])
        contrib.append(math.fsum(parts))
    return MomentReport(mean(model), math.fsum(contrib), tuple(contrib))


def surrogate_polynomial(model: PceModel) -> SparsePolynomial:
    """Expand ``sum C_j Psi_j`` into a single monomial-basis polynomial."""
    acc: dict[MultiIndex, list[float]] = {}
    for e in model.basis.entries():
        c = model.coefficients[e.index]
        for k, v in e.psi.terms.items():
            acc.setdefault(k, []).append(c * v)
    return SparsePolynomial(model.dimension, {k: math.fsum(v) for k, v in acc.items()})


def eval_surrogate(model: PceModel, x) -> float | np.ndarray:
    """``sum_j C_j Psi_j(x)`` at one point or at each row of an array."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.dimension:
        raise DimensionError(f"point has {x.shape[-1]} coordinates, expected {model.dimension}")
    single = x.ndim == 1
    psi = model.basis.psi_values(np.atleast_2d(x))
    out = psi @ model.coefficient_vector()
    return float(out[0]) if single else out


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def density(self) -> np.ndarray:
        widths = np.diff(self.edges)
        return self.counts / (self.counts.sum() * widths)

    def to_csv(self) -> str:
        rows = ["bin_left,bin_right,count,density"]
        for lo, hi, c, d in zip(self.edges[:-1], self.edges[1:], self.counts, self.density):
            rows.append(f"{lo!r},{hi!r},{int(c)},{d!r}")
        return "\n".join(rows) + "\n"


def histogram(values: np.ndarray) -> Histogram:
    """Fixed-width histogram with Freedman-Diaconis bins, at most 512 of them."""
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        edges = np.array([lo - 0.5, lo + 0.5])
        return Histogram(edges, np.array([values.size]))
    q75, q25 = np.percentile(values, [75, 25])
    width = 2.0 * (q75 - q25) * values.size ** (-1.0 / 3.0)
    bins = MAX_HISTOGRAM_BINS if width <= 0 else int(math.ceil((hi - lo) / width))
    bins = min(max(bins, 1), MAX_HISTOGRAM_BINS)
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return Histogram(edges, counts)


def sample_surrogate(model: PceModel, n: int, seed: int) -> tuple[np.ndarray, Histogram]:
    """Evaluate the surrogate on ``n`` seeded Gaussian draws."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x = random_gaussian(model.measure, seed, n)
    vals = np.asarray(eval_surrogate(model, x))
    return vals, histogram(vals)


def l1_variance_error(exact_var: float, model: PceModel) -> float:
    """Relative absolute error of the model variance against ``exact_var``."""
    if not exact_var > 0:
        raise DomainError("exact variance must be positive")
    return abs(exact_var - variance(model).variance) / exact_var


# -- model files ----------------------------------------------------------------

class ModelFormatError(GpceError, ValueError):
    """A model file violates the schema."""


def model_to_dict(model: PceModel) -> dict:
    return {
        "N": model.dimension,
        "m": model.order,
        "covariance": [[float(v) for v in row] for row in model.measure.covariance],
        "coefficients": [{"index": index_label(j), "value": c}
                         for j, c in model.coefficients.items()],
        "build": dict(model.build_meta),
    }


def model_to_json(model: PceModel) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def model_from_dict(data: Mapping) -> PceModel:
    try:
        n, m = int(data["N"]), int(data["m"])
        cov = data["covariance"]
        entries = data["coefficients"]
        build = dict(data.get("build", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"missing or invalid field: {exc}") from exc
    measure = make_measure(cov)
    if measure.dimension != n:
        raise ModelFormatError(f"covariance is {measure.dimension}x{measure.dimension}, N is {n}")
    if len(entries) != count_total(n, m):
        raise ModelFormatError(f"expected {count_total(n, m)} coefficients, found {len(entries)}")
    expected = enumerate_total(n, m)
    coeffs: dict[MultiIndex, float] = {}
    for pos, (want, item) in enumerate(zip(expected, entries)):
        try:
            got = parse_index_label(item["index"])
            value = float(item["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"bad coefficient entry {pos}: {exc}") from exc
        if got != want:
            raise ModelFormatError(f"coefficient {pos} has index {got}, expected {want}")
        coeffs[got] = value
    return PceModel(measure, m, coeffs, build)


def model_from_json(text: str) -> PceModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc.msg}") from exc
    return model_from_dict(data)


# -- Example 2: linear ODE with random rate and forcing ---------------------

def ode_solution(t: float, x) -> float | np.ndarray:
    """``y(t; x) = (1 + x_2)(1 - exp(-(1 + x_1) t))``, for one point or rows of an array."""
    x = np.asarray(x, dtype=float)
    return (1.0 + x[..., 1]) * (1.0 - np.exp(-(1.0 + x[..., 0]) * t))


def ode_exact_moments(t: float, rho: float) -> tuple[float, float]:
    """Closed-form ``(E[y], E[y^2])`` for the ODE solution.

    These closed forms hold for marginal standard deviations of 1/4
    (variances 1/16) with correlation ``rho``.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    if not -1.0 < rho < 1.0:
        raise DomainError("rho must lie in (-1, 1)")
    m1 = 1.0 + (rho * t / 16.0 - 1.0) * math.exp(t * t / 32.0 - t)
    rt = rho * t
    m2 = math.exp(-2.0 * t) / 128.0 * (
        136.0 * math.exp(2.0 * t)
        - math.exp(t + t * t / 32.0) * (272.0 + rt * (rt - 32.0))
        + 2.0 * math.exp(t * t / 8.0) * (68.0 + rt * (rt - 16.0))
    )
    return m1, m2
