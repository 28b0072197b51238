"""Reproduction and property checks run by ``gpce validate`` and the acceptance tests."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import reference
from .gaussian import GaussianMeasure, make_measure, polynomial_expectation
from .hermite import build_basis, hermite_polynomial, poly_mul
from .indexing import enumerate_total
from .moments import gram_matrix, second_moment_H
from .pce import build_pce, l1_variance_error, mean, ode_exact_moments, variance
from .scenarios import (
    example1_measure,
    example1_output,
    example2_measure,
    example2_output,
)


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    got: float
    tolerance: float
    relative: bool = True

    @property
    def error(self) -> float:
        diff = abs(self.got - self.expected)
        if self.relative and self.expected != 0.0:
            return diff / abs(self.expected)
        return diff

    @property
    def passed(self) -> bool:
        return math.isfinite(self.got) and self.error <= self.tolerance

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error"] = self.error
        d["passed"] = self.passed
        return d

    def describe(self) -> str:
        kind = "relative" if self.relative and self.expected != 0.0 else "absolute"
        return (f"{self.name}: expected {self.expected:.12g}, got {self.got:.12g}, "
                f"{kind} error {self.error:.3g} > tolerance {self.tolerance:g}")


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random covariance: a random correlation matrix scaled by standard deviations in [0.7, 1.4]."""
    a = rng.normal(size=(n, n))
    s = a @ a.T + 0.5 * n * np.eye(n)
    d = np.sqrt(np.diag(s))
    std = rng.uniform(0.7, 1.4, size=n)
    return s / np.outer(d, d) * np.outer(std, std)


def example1_checks(tol: float = 1e-10) -> list[Check]:
    out = []
    for case in sorted(reference.EXAMPLE1_COEFFICIENTS):
        model = build_pce(example1_measure(case), example1_output(), 2)
        for (j, got), want in zip(model.coefficients.items(), reference.EXAMPLE1_COEFFICIENTS[case]):
            out.append(Check(f"case{case} C{j}", want, got, tol))
        want_mean, want_var = reference.EXAMPLE1_MOMENTS[case]
        out.append(Check(f"case{case} mean", want_mean, mean(model), tol))
        out.append(Check(f"case{case} variance", want_var, variance(model).variance, tol))
    return out


def example2_errors(rho: float, orders=range(1, 7), t: float = 1.0) -> list[float]:
    m1, m2 = ode_exact_moments(t, rho)
    exact_var = m2 - m1 * m1
    measure = example2_measure(rho)
    y = example2_output(t)
    return [l1_variance_error(exact_var, build_pce(measure, y, m)) for m in orders]


def example2_checks() -> list[Check]:
    errs = example2_errors(0.5)
    out = []
    for m, (got, want) in enumerate(zip(errs, reference.EXAMPLE2_VARIANCE_ERRORS), start=1):
        # the order-6 error sits near 1e-11, where double rounding limits agreement
        out.append(Check(f"rho=0.5 e{m}", want, got, 1e-3 if m == 6 else 1e-6))
    return out


def oracle_checks(measure: GaussianMeasure, max_degree: int, label: str,
                  tol: float = 1e-9) -> list[Check]:
    """Closed-form ``E[H_j H_k]`` against the Wick-moment expectation of the product."""
    n = measure.dimension
    cache: dict = {}
    idx = enumerate_total(n, max_degree)
    hs = {j: hermite_polynomial(measure, j, cache) for j in idx}
    out = []
    for a, j in enumerate(idx):
        for k in idx[a:]:
            oracle = polynomial_expectation(measure, poly_mul(hs[j], hs[k]))
            scale = math.sqrt(second_moment_H(measure, j, j) * second_moment_H(measure, k, k))
            if sum(j) != sum(k):
                out.append(Check(f"{label} weak-orth {j},{k}", 0.0, oracle / scale, 1e-10,
                                 relative=False))
                continue
            closed = second_moment_H(measure, j, k)
            # off-diagonal values can vanish; measure them against the diagonal scale
            out.append(Check(f"{label} E[H{j}H{k}]", oracle / scale, closed / scale, tol,
                             relative=(j == k)))
    return out


def gram_spd_checks(rhos=(0.0, 0.2, 0.5, 0.8, 0.95), max_degree: int = 4) -> list[Check]:
    out = []
    for rho in rhos:
        cov = np.full((3, 3), rho)
        np.fill_diagonal(cov, 1.0)
        measure = make_measure(cov)
        for l in range(max_degree + 1):
            try:
                g = gram_matrix(measure, l)
                ok = float(np.min(np.diag(g.chol_lower)) > 0)
            except Exception:
                ok = 0.0
            out.append(Check(f"rho={rho} A{l} SPD", 1.0, ok, 0.0))
    return out


def properties_checks(seed: int = 20240101, count: int = 5, max_degree: int = 3) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for s in range(count):
        for n in (1, 2, 3):
            measure = make_measure(random_spd(rng, n))
            out.extend(oracle_checks(measure, max_degree, f"sigma{s} N={n}"))
            basis = build_basis(measure, max_degree)
            for e in basis.entries():
                if any(e.index):
                    out.append(Check(f"sigma{s} N={n} E[H{e.index}]", 0.0,
                                     polynomial_expectation(measure, e.hermite), 1e-10, relative=False))
                out.append(Check(f"sigma{s} N={n} E[Psi{e.index}^2]", 1.0,
                                 polynomial_expectation(measure, poly_mul(e.psi, e.psi)), 1e-10))
    out.extend(gram_spd_checks())
    return out


SUITES = {
    "example1": example1_checks,
    "example2": example2_checks,
    "properties": properties_checks,
}


def run_suite(name: str) -> list[Check]:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}") from None
    return fn()
