"""Builtin measures and output functions for the three worked examples."""

from __future__ import annotations

import math

import numpy as np

from .gaussian import GaussianMeasure, exponential_field_covariance, make_measure
from .hermite import SparsePolynomial
from .pce import ExpPolynomialOutput, PolynomialOutput

# (rho_12, rho_13, rho_23) for the four trivariate cases, unit variances
EXAMPLE1_CORRELATIONS = {
    1: (0.0, 0.0, 0.0),
    2: (0.2, 0.2, 0.2),
    3: (0.2, 0.4, 0.8),
    4: (-0.2, 0.4, -0.8),
}

# Marginal variance of both inputs in the ODE example (standard deviation 1/4).
EXAMPLE2_VARIANCE = 1.0 / 16.0

EXAMPLE3_POINTS = 11
EXAMPLE3_LENGTH = 2.0
EXAMPLE3_COV = 0.2
EXAMPLE3_MEAN_THICKNESS = 0.01


def example1_covariance(case: int) -> np.ndarray:
    r12, r13, r23 = EXAMPLE1_CORRELATIONS[case]
    return np.array([[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]])


def example1_measure(case: int) -> GaussianMeasure:
    return make_measure(example1_covariance(case))


def example1_polynomial() -> SparsePolynomial:
    """``12 + 4(x1 + x2 + x3) + x1 x2 + x1 x3 + x2 x3``."""
    return SparsePolynomial(3, {
        (0, 0, 0): 12.0,
        (1, 0, 0): 4.0, (0, 1, 0): 4.0, (0, 0, 1): 4.0,
        (1, 1, 0): 1.0, (1, 0, 1): 1.0, (0, 1, 1): 1.0,
    })


def example1_output() -> PolynomialOutput:
    return PolynomialOutput(example1_polynomial())


def example2_covariance(rho: float) -> np.ndarray:
    v = EXAMPLE2_VARIANCE
    return np.array([[v, rho * v], [rho * v, v]])


def example2_measure(rho: float) -> GaussianMeasure:
    return make_measure(example2_covariance(rho))


def example2_output(t: float) -> ExpPolynomialOutput:
    """``(1 + x2)(1 - exp(-(1 + x1) t))`` written as a sum of polynomial-times-exponential terms."""
    one_plus_x2 = SparsePolynomial(2, {(0, 0): 1.0, (0, 1): 1.0})
    return ExpPolynomialOutput([
        (one_plus_x2, (0.0, 0.0)),
        (one_plus_x2 * (-math.exp(-t)), (-t, 0.0)),
    ])


def example3_coordinates() -> np.ndarray:
    return np.linspace(0.0, EXAMPLE3_LENGTH, EXAMPLE3_POINTS)


def example3_covariance() -> np.ndarray:
    variance = math.log(1.0 + EXAMPLE3_COV**2)
    return exponential_field_covariance(example3_coordinates(), variance, 0.2 * EXAMPLE3_LENGTH)


def example3_measure() -> GaussianMeasure:
    return make_measure(example3_covariance())


def example3_weights() -> np.ndarray:
    """Trapezoidal weights over the field grid."""
    h = EXAMPLE3_LENGTH / (EXAMPLE3_POINTS - 1)
    w = np.full(EXAMPLE3_POINTS, h)
    w[0] = w[-1] = h / 2.0
    return w


def example3_output() -> ExpPolynomialOutput:
    """Integral of a lognormal thickness field ``c exp(alpha)`` by the trapezoidal rule.

    ``c = mu_t / sqrt(1 + v_t^2)`` makes each nodal thickness have mean ``mu_t``.
    """
    n = EXAMPLE3_POINTS
    c = EXAMPLE3_MEAN_THICKNESS / math.sqrt(1.0 + EXAMPLE3_COV**2)
    terms = []
    for i, w in enumerate(example3_weights()):
        s = np.zeros(n)
        s[i] = 1.0
        terms.append((SparsePolynomial.constant(n, w * c), s))
    return ExpPolynomialOutput(terms)


def example3_exact_moments() -> tuple[float, float]:
    """Exact mean and variance of :func:`example3_output` (lognormal algebra)."""
    cov = example3_covariance()
    c = EXAMPLE3_MEAN_THICKNESS / math.sqrt(1.0 + EXAMPLE3_COV**2)
    w = example3_weights() * c
    d = np.diag(cov)
    m = np.exp(d / 2.0)
    mean = float(w @ m)
    second = np.outer(m, m) * np.expm1(cov)
    return mean, float(w @ second @ w)
