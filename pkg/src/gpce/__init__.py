"""Polynomial chaos expansions in Hermite polynomials of dependent Gaussian inputs.

The basis is built from the multivariate Hermite polynomials of the input
measure itself, so correlated inputs need no decorrelating transform.  The
polynomials are orthogonal across degrees only; within a degree the
coefficients come from one small symmetric positive-definite solve.
"""

from .errors import (
    CapacityError,
    ConditioningError,
    ConsistencyError,
    DefinitenessError,
    DimensionError,
    DomainError,
    EvaluationError,
    GpceError,
    RangeError,
    ShapeError,
)
from .gaussian import (
    CovarianceFormatError,
    GaussianMeasure,
    QmcConfig,
    exponential_field_covariance,
    gaussian_map,
    make_measure,
    monomial_moment,
    norm_ppf,
    polynomial_expectation,
    random_gaussian,
    read_covariance,
    sobol_points,
    write_covariance,
)
from .hermite import (
    HermiteBasis,
    SparsePolynomial,
    build_basis,
    evaluate,
    hermite_polynomial,
)
from .indexing import (
    IndexMatrix,
    count_degree,
    count_total,
    enumerate_degree,
    enumerate_margin_matrices,
    enumerate_total,
    grlex_compare,
)
from .moments import GramMatrix, gram_matrix, norm_sq_H, second_moment_H, second_moment_Psi
from .pce import (
    CallableOutput,
    ExpPolynomialOutput,
    MomentReport,
    PceModel,
    PolynomialOutput,
    build_pce,
    eval_surrogate,
    mean,
    model_from_json,
    model_to_json,
    sample_surrogate,
    variance,
)

__version__ = "0.1.0"
