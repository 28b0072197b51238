import itertools
import json
import math

import numpy as np
import pytest
from numpy.polynomial import hermite_e

from gpce.errors import ConditioningError, DimensionError, DomainError, EvaluationError, GpceError
from gpce.gaussian import QmcConfig, make_measure, polynomial_expectation, random_gaussian
from gpce.hermite import SparsePolynomial, build_basis, evaluate
from gpce.indexing import count_total, enumerate_total
from gpce.moments import gram_matrix
from gpce.pce import (
    CallableOutput,
    ExpPolynomialOutput,
    ModelFormatError,
    PolynomialOutput,
    build_pce,
    eval_surrogate,
    histogram,
    l1_variance_error,
    mean,
    model_from_json,
    model_to_dict,
    model_to_json,
    ode_exact_moments,
    ode_solution,
    qmc_sample,
    rhs_exact,
    rhs_qmc,
    sample_surrogate,
    solve_degree,
    surrogate_polynomial,
    variance,
)
from gpce.reference import EXAMPLE1_COEFFICIENTS, EXAMPLE1_MOMENTS, EXAMPLE2_VARIANCE_ERRORS
from gpce.scenarios import (
    example1_measure,
    example1_output,
    example1_polynomial,
    example2_measure,
    example2_output,
    example3_exact_moments,
    example3_measure,
    example3_output,
)
from gpce.validation import random_spd


def random_polynomial(rng, n, d):
    terms = {j: float(rng.normal()) for j in enumerate_total(n, d) if rng.random() < 0.7}
    terms[tuple([d] + [0] * (n - 1))] = 1.0
    return SparsePolynomial(n, terms)


def const_model(measure, c):
    return build_pce(measure, SparsePolynomial.constant(measure.dimension, c), 0)


# -- right-hand sides -----------------------------------------------------------------------

def test_rhs_exact_examples():
    m = example1_measure(3)
    b = build_basis(m, 3)
    one = SparsePolynomial.constant(3, 1.0)
    for l in (1, 2, 3):
        # zero up to rounding in the Wick sums
        assert np.max(np.abs(rhs_exact(m, b, one, l))) <= 1e-14
    m1 = example1_measure(1)
    assert rhs_exact(m1, build_basis(m1, 1), example1_output(), 1) == pytest.approx([4, 4, 4], rel=1e-15)
    m2 = example1_measure(2)
    assert rhs_exact(m2, build_basis(m2, 0), example1_output(), 0) == pytest.approx([63 / 5], rel=1e-15)


def test_rhs_qmc_constant_output():
    m = example1_measure(2)
    b = build_basis(m, 3)
    one = SparsePolynomial.constant(3, 1.0)
    cfg = QmcConfig(1024, 3)
    for l in (1, 2, 3):
        assert np.array_equal(rhs_qmc(m, b, one, l, cfg), np.zeros(len(b.degrees[l])))
    # the uncentred estimator carries the QMC error of mean(Psi_j); for cubic
    # indices at this sample size it is about 1.2e-2, so only l <= 2 is bounded
    for l in (1, 2):
        assert np.max(np.abs(rhs_qmc(m, b, one, l, cfg, center=False))) <= 1e-2


def test_rhs_qmc_close_to_exact():
    m = example1_measure(2)
    b = build_basis(m, 2)
    y = example1_output()
    exact = rhs_exact(m, b, y, 1)
    got = rhs_qmc(m, b, y, 1, QmcConfig(4096, 3))
    assert np.max(np.abs(got - exact) / np.abs(exact)) < 0.01


@pytest.mark.parametrize("center", [True, False])
def test_rhs_qmc_convergence(center):
    m = example1_measure(3)
    b = build_basis(m, 2)
    y = example1_output()
    exact = np.concatenate([rhs_exact(m, b, y, l) for l in range(3)])
    errs = []
    for n in (1024, 2048, 4096, 8192):
        got = np.concatenate([rhs_qmc(m, b, y, l, QmcConfig(n, 3), center=center) for l in range(3)])
        errs.append(np.max(np.abs(got - exact)) / np.max(np.abs(exact)))
    assert sum(b > a for a, b in zip(errs, errs[1:])) <= 1
    assert errs[-1] < 0.005


def test_qmc_sample_reports_bad_point():
    m = make_measure(np.eye(2))
    cfg = QmcConfig(64, 2, skip=0)
    pts = qmc_sample(m, CallableOutput(lambda x: x[0], 2), cfg).points
    target = int(np.argmax(pts[:, 0]))
    y = CallableOutput(lambda x: math.inf if x[0] >= pts[target, 0] else 1.0, 2)
    with pytest.raises(EvaluationError) as info:
        qmc_sample(m, y, cfg)
    assert info.value.sample_index == target


# -- per-degree solves ------------------------------------------------------------------------

def test_solve_identity():
    g = gram_matrix(make_measure(np.eye(3)), 2)
    b = np.arange(6.0)
    c, res = solve_degree(g, b)
    assert np.array_equal(c, b) and res == 0.0


def test_solve_table_examples():
    m2 = example1_measure(2)
    b2 = build_basis(m2, 2)
    c, _ = solve_degree(gram_matrix(m2, 2), rhs_exact(m2, b2, example1_output(), 2))
    assert c == pytest.approx(EXAMPLE1_COEFFICIENTS[2][4:], rel=1e-12)
    m4 = example1_measure(4)
    b4 = build_basis(m4, 1)
    c, _ = solve_degree(gram_matrix(m4, 1), rhs_exact(m4, b4, example1_output(), 1))
    assert c == pytest.approx([12 / math.sqrt(5), 0.0, 4 * math.sqrt(6 / 5)], rel=1e-12, abs=1e-13)


def test_solve_shape_and_residual_errors():
    g = gram_matrix(example1_measure(2), 1)
    with pytest.raises(DimensionError):
        solve_degree(g, np.ones(4))
    broken = type(g)(g.degree, g.indices, g.entries, np.eye(3))
    with pytest.raises(ConditioningError, match="degree 1"):
        solve_degree(broken, np.ones(3))


# -- builds ---------------------------------------------------------------------------------

@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_build_reproduces_coefficients(case):
    model = build_pce(example1_measure(case), example1_output(), 2)
    assert list(model.coefficients) == enumerate_total(3, 2)
    for got, want in zip(model.coefficients.values(), EXAMPLE1_COEFFICIENTS[case]):
        assert got == pytest.approx(want, rel=1e-10, abs=1e-13)
    assert max(model.build_meta["residuals"]) <= 1e-12


def test_build_order_zero():
    m = example1_measure(3)
    model = build_pce(m, example1_output(), 0)
    assert model.coefficients == {(0, 0, 0): pytest.approx(67 / 5, rel=1e-14)}
    assert variance(model).variance == 0.0


def test_polynomial_exactness():
    rng = np.random.default_rng(77)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        measure = make_measure(random_spd(rng, n))
        d = int(rng.integers(1, 4))
        y = random_polynomial(rng, n, d)
        model = build_pce(measure, y, d)
        surrogate = surrogate_polynomial(model)
        assert surrogate.max_abs_diff(y) <= 1e-9
        mu = polynomial_expectation(measure, y)
        assert mean(model) == pytest.approx(mu, abs=1e-9)
        var = polynomial_expectation(measure, y * y) - mu * mu
        assert variance(model).variance == pytest.approx(var, rel=1e-8)


def tensor_projection(y, j, points=6):
    """``E[y He_j / sqrt(j!)]`` under independent standard normals, by tensor Gauss-Hermite quadrature."""
    nodes, weights = hermite_e.hermegauss(points)
    weights = weights / weights.sum()
    total = 0.0
    for combo in itertools.product(range(points), repeat=len(j)):
        x = nodes[list(combo)]
        w = math.prod(weights[list(combo)])
        he = math.prod(hermite_e.hermeval(xi, [0] * ji + [1]) for xi, ji in zip(x, j))
        total += w * evaluate(y, x) * he
    return total / math.sqrt(math.prod(math.factorial(v) for v in j))


def test_classical_reduction():
    """Independent inputs: identity Gram matrices and tensor-product projections as coefficients."""
    rng = np.random.default_rng(78)
    measure = make_measure(np.eye(3))
    for _ in range(10):
        y = random_polynomial(rng, 3, 3)
        model = build_pce(measure, y, 3)
        for l in range(4):
            assert np.array_equal(gram_matrix(measure, l).entries, np.eye(len(model.basis.degrees[l])))
        for j, c in model.coefficients.items():
            assert c == pytest.approx(tensor_projection(y, j), abs=1e-10)


def test_build_errors():
    m = example1_measure(2)
    with pytest.raises(GpceError, match="closed-form"):
        build_pce(m, CallableOutput(lambda x: 1.0, 3), 1)
    with pytest.raises(DimensionError):
        build_pce(m, SparsePolynomial.constant(2), 1)
    with pytest.raises(ValueError):
        build_pce(m, example1_output(), -1)
    bad = CallableOutput(lambda x: float("nan"), 3)
    with pytest.raises(EvaluationError, match="sample 0"):
        build_pce(m, bad, 1, QmcConfig(16, 3))


def test_build_error_names_degree(monkeypatch):
    import gpce.pce as mod

    def fail(measure, l):
        if l == 2:
            raise ConditioningError("not positive-definite")
        return gram_matrix(measure, l)

    monkeypatch.setattr(mod, "gram_matrix", fail)
    with pytest.raises(ConditioningError, match="degree 2"):
        build_pce(example1_measure(1), example1_output(), 2)


def test_qmc_build_meta():
    model = build_pce(example1_measure(2), example1_output(), 2, QmcConfig(2048, 3, skip=7))
    assert model.build_meta["method"] == "qmc"
    assert model.build_meta["qmc_size"] == 2048
    assert model.build_meta["skip"] == 7
    assert len(model.build_meta["residuals"]) == 3


def test_callable_and_vectorized_outputs_agree():
    m = example1_measure(3)
    p = example1_polynomial()
    cfg = QmcConfig(512, 3)
    a = build_pce(m, CallableOutput(lambda x: evaluate(p, x), 3), 2, cfg)
    b = build_pce(m, CallableOutput(lambda x: evaluate(p, x), 3, vectorized=True), 2, cfg)
    c = build_pce(m, PolynomialOutput(p), 2, cfg)
    assert a.coefficient_vector() == pytest.approx(b.coefficient_vector(), rel=1e-13)
    assert b.coefficient_vector() == pytest.approx(c.coefficient_vector(), rel=1e-13)


# -- statistics ------------------------------------------------------------------------------

@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_moments_examples(case):
    model = build_pce(example1_measure(case), example1_output(), 2)
    want_mean, want_var = EXAMPLE1_MOMENTS[case]
    assert mean(model) == pytest.approx(want_mean, rel=1e-12)
    report = variance(model)
    assert report.variance == pytest.approx(want_var, rel=1e-12)
    assert math.fsum(report.contributions) == pytest.approx(report.variance, rel=1e-10)


def test_constant_model():
    m = example1_measure(2)
    model = const_model(m, 3.5)
    assert mean(model) == 3.5
    assert variance(model).variance == 0.0
    assert eval_surrogate(model, np.zeros((4, 3))) == pytest.approx([3.5] * 4)
    values, hist = sample_surrogate(model, 100, 1)
    assert np.all(values == 3.5)
    assert hist.counts.tolist() == [100]


def test_variance_contributions_match_truncations():
    rng = np.random.default_rng(79)
    measure = make_measure(random_spd(rng, 3))
    model = build_pce(measure, random_polynomial(rng, 3, 3), 3)
    report = variance(model)
    running = 0.0
    for l in range(1, 4):
        truncated = type(model)(measure, l, {j: c for j, c in model.coefficients.items() if sum(j) <= l})
        running += report.contributions[l - 1]
        assert variance(truncated).variance == pytest.approx(running, rel=1e-10)


def test_eval_surrogate_examples():
    for case in (1, 2, 3, 4):
        model = build_pce(example1_measure(case), example1_output(), 2)
        assert eval_surrogate(model, [0.0, 0.0, 0.0]) == pytest.approx(12.0, abs=1e-9)
    model = build_pce(example1_measure(3), example1_output(), 2)
    assert eval_surrogate(model, [1.0, -1.0, 2.0]) == pytest.approx(19.0, abs=1e-9)
    with pytest.raises(DimensionError):
        eval_surrogate(model, [1.0, 2.0])


def test_sample_surrogate_statistics():
    model = build_pce(example1_measure(1), example1_output(), 2)
    values, hist = sample_surrogate(model, 10**5, 42)
    assert abs(values.mean() - 12.0) < 0.1
    assert values.var(ddof=1) == pytest.approx(51.0, rel=0.02)
    again, hist2 = sample_surrogate(model, 10**5, 42)
    assert np.array_equal(values, again)
    assert np.array_equal(hist.edges, hist2.edges) and np.array_equal(hist.counts, hist2.counts)
    assert hist.counts.sum() == 10**5
    widths = np.diff(hist.edges)
    assert float(np.sum(hist.density * widths)) == pytest.approx(1.0, rel=1e-12)
    one, _ = sample_surrogate(model, 1, 0)
    assert one.shape == (1,)


def test_histogram_bins():
    x = np.random.default_rng(0).normal(size=1000)
    h = histogram(x)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    width = 2 * iqr / 1000 ** (1 / 3)
    assert len(h.counts) == math.ceil((x.max() - x.min()) / width)
    assert h.edges[0] == x.min() and h.edges[-1] == x.max()
    spread = np.concatenate([np.zeros(1000), [1e9]])
    assert len(histogram(spread).counts) == 512
    assert h.to_csv().splitlines()[0] == "bin_left,bin_right,count,density"


def test_l1_variance_error_examples():
    model = build_pce(example1_measure(1), example1_output(), 2)
    assert l1_variance_error(51.0, model) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DomainError):
        l1_variance_error(0.0, model)
    m1, m2 = ode_exact_moments(1.0, 0.5)
    for order in (1, 2):
        e = l1_variance_error(m2 - m1 * m1, build_pce(example2_measure(0.5), example2_output(1.0), order))
        assert e == pytest.approx(EXAMPLE2_VARIANCE_ERRORS[order - 1], rel=1e-6)


def test_moment_report_formats():
    report = variance(build_pce(example1_measure(4), example1_output(), 2))
    data = json.loads(report.to_json())
    assert data["mean"] == pytest.approx(57 / 5) and len(data["contributions"]) == 2
    lines = report.to_csv().splitlines()
    assert lines[0] == "quantity,value" and lines[1].startswith("mean,")


# -- model files -------------------------------------------------------------------------------

def test_model_round_trip():
    model = build_pce(example1_measure(3), example1_output(), 2, QmcConfig(1024, 3))
    back = model_from_json(model_to_json(model))
    assert back.coefficients == model.coefficients
    assert np.array_equal(back.measure.covariance, model.measure.covariance)
    assert back.build_meta == model.build_meta
    assert variance(back).variance == variance(model).variance


def test_model_schema_errors():
    data = model_to_dict(build_pce(example1_measure(2), example1_output(), 2))
    short = dict(data, coefficients=data["coefficients"][:-1])
    with pytest.raises(ModelFormatError, match="expected 10"):
        model_from_json(json.dumps(short))
    swapped = list(data["coefficients"])
    swapped[1], swapped[2] = swapped[2], swapped[1]
    with pytest.raises(ModelFormatError, match="coefficient 1"):
        model_from_json(json.dumps(dict(data, coefficients=swapped)))
    with pytest.raises(ModelFormatError):
        model_from_json(json.dumps({k: v for k, v in data.items() if k != "m"}))
    with pytest.raises(ModelFormatError):
        model_from_json("{not json")
    with pytest.raises(ModelFormatError, match="N is 2"):
        model_from_json(json.dumps(dict(data, N=2)))
    assert count_total(3, 2) == len(data["coefficients"])


# -- the ODE example -----------------------------------------------------------------------------

def test_ode_solution_examples():
    x = np.random.default_rng(0).normal(size=(10, 2))
    assert np.all(ode_solution(0.0, x) == 0.0)
    assert ode_solution(1.0, [0.0, 0.0]) == pytest.approx(1 - math.exp(-1), rel=1e-15)
    y = example2_output(0.7)
    assert y.evaluate(x) == pytest.approx(ode_solution(0.7, x), rel=1e-13)


def test_ode_exact_moments_examples():
    assert ode_exact_moments(0.0, 0.3)[0] == pytest.approx(0.0, abs=1e-15)
    want = 1 + (1 / 32 - 1) * math.exp(1 / 32 - 1)
    assert ode_exact_moments(1.0, 0.5)[0] == pytest.approx(want, rel=1e-15)
    with pytest.raises(DomainError):
        ode_exact_moments(1.0, 1.0)
    with pytest.raises(DomainError):
        ode_exact_moments(1.5, 0.0)


@pytest.mark.parametrize("rho", [0.0, 0.5])
def test_ode_moments_against_monte_carlo(rho):
    m = example2_measure(rho)
    y = ode_solution(1.0, random_gaussian(m, 314, 10**6))
    m1, m2 = ode_exact_moments(1.0, rho)
    n = len(y)
    assert abs(y.mean() - m1) <= 4 * y.std() / math.sqrt(n)
    dev = (y - y.mean()) ** 2
    assert abs(dev.mean() - (m2 - m1 * m1)) <= 4 * dev.std() / math.sqrt(n)


def test_exp_polynomial_exact_expectations():
    m = example2_measure(0.5)
    y = example2_output(1.0)
    m1, m2 = ode_exact_moments(1.0, 0.5)
    one = SparsePolynomial.constant(2)
    assert y.expectation_times(m, one) == pytest.approx(m1, rel=1e-14)
    squared = ExpPolynomialOutput([(p * q, s + t) for p, s in y.terms for q, t in y.terms])
    assert squared.expectation_times(m, one) == pytest.approx(m2, rel=1e-13)


def test_example3_output_moments():
    mu, var = example3_exact_moments()
    m = example3_measure()
    y = example3_output()
    assert y.expectation_times(m, SparsePolynomial.constant(11)) == pytest.approx(mu, rel=1e-14)
    vals = y.evaluate(random_gaussian(m, 5, 10**5))
    assert abs(vals.mean() - mu) <= 4 * vals.std() / math.sqrt(len(vals))
    exact2 = build_pce(m, y, 2)
    assert mean(exact2) == pytest.approx(mu, rel=1e-13)
    assert variance(exact2).variance == pytest.approx(var, rel=1e-3)
