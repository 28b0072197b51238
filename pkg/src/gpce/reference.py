"""Published reference values for the worked examples."""

from math import sqrt

# Example 1 coefficients in rank order:
# (0,0,0), (1,0,0), (0,1,0), (0,0,1), (2,0,0), (1,1,0), (1,0,1), (0,2,0), (0,1,1), (0,0,2)
EXAMPLE1_COEFFICIENTS = {
    1: (12.0, 4.0, 4.0, 4.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0),
    2: (63 / 5, 2 * sqrt(42 / 5), 2 * sqrt(42 / 5), 2 * sqrt(42 / 5),
        33 / (35 * sqrt(2)), 19 * sqrt(37) / 70, 19 * sqrt(37) / 70,
        33 / (35 * sqrt(2)), 19 * sqrt(37) / 70, 33 / (35 * sqrt(2))),
    3: (67 / 5, 16 / sqrt(5), 4 * sqrt(35 / 3), 44 * sqrt(2 / 15),
        17 / (10 * sqrt(2)), 31 / 15 * sqrt(11 / 2), 32 * sqrt(7) / 15,
        203 / (30 * sqrt(2)), 34 * sqrt(23) / 15, 76 * sqrt(2) / 15),
    4: (57 / 5, 12 / sqrt(5), 0.0, 4 * sqrt(6 / 5),
        3 / (10 * sqrt(2)), 3 / 5 * sqrt(11 / 2), -sqrt(7) / 5,
        -49 / (10 * sqrt(2)), 7 * sqrt(23) / 5, -12 * sqrt(2) / 5),
}

# (mean, variance) of the second-order expansion for each case
EXAMPLE1_MOMENTS = {
    1: (12.0, 51.0),
    2: (63 / 5, 1794 / 25),
    3: (67 / 5, 2514 / 25),
    4: (57 / 5, 774 / 25),
}

# Relative variance errors at t = 1, rho = 1/2 for orders 1..6
EXAMPLE2_VARIANCE_ERRORS = (
    9.26928e-3,
    3.22487e-4,
    8.03445e-6,
    1.50027e-7,
    2.20588e-9,
    2.65667e-11,
)

EXAMPLE2_RHOS = (-0.9, -0.5, 0.0, 0.5, 0.9)
