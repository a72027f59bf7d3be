"""Exit time and exit place of pseudo-Brownian motion from a bounded interval.

The pseudo-process of order 2N is driven by ``du/dt = kappa_N d^(2N)u/dx^(2N)``
with ``kappa_N = (-1)**(N-1)``.  The package evaluates the Laplace transforms
of its exit statistics as ratios of 2N x 2N determinants, builds the exact
Hermite polynomials that give the exit-place law, and inverts the transforms
numerically.
"""
__version__ = "0.1.0"

from .core import ComplexMatrix, ProcessParams, RootSystem, ScaledComplex, compute_roots, det_scaled, \
    exp_lambda
from .hermite_exact import RationalPoly, build_hermite_basis, exit_location_law, expected_exit_polynomial, \
    moment_quotient_coefficients, overshoot_moment, ruin_probabilities
from .inversion import DensityTable, InversionConfig, PrecisionLossWarning, exit_joint_weights, \
    exit_time_density, invert_scalar, survival_probability
from .laplace_domain import BoundaryData, DegenerateError, LaplaceEvaluation, build_delta_matrix, \
    derivative_delta, evaluate, feynman_kac, limit_coefficients

__all__ = [
    "BoundaryData", "ComplexMatrix", "DegenerateError", "DensityTable", "InversionConfig",
    "LaplaceEvaluation", "PrecisionLossWarning", "ProcessParams", "RationalPoly", "RootSystem",
    "ScaledComplex", "build_delta_matrix", "build_hermite_basis", "compute_roots", "derivative_delta",
    "det_scaled", "evaluate", "exit_joint_weights", "exit_location_law", "exit_time_density",
    "exp_lambda", "expected_exit_polynomial", "feynman_kac", "invert_scalar", "limit_coefficients",
    "moment_quotient_coefficients", "overshoot_moment", "ruin_probabilities", "survival_probability",
]
