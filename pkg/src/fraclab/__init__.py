"""fraclab: a desk-scale numerical laboratory for fractional Hardy-Schrodinger
extension problems.

The package solves the degenerate extension problem on a half disk, the
weighted eigenproblem on the upper half sphere, tracks the Almgren
frequency of solutions down to the singularity, and reconstructs the
same solutions mode by mode through the radial integral equations, with
every closed-form constant of the underlying theory available for
cross-checks.
"""

from .constants import (
    ExponentPair,
    ProblemParams,
    alpha_of_lambda,
    characteristic_exponents,
    gamma_exponent,
    hardy_constant,
    kappa,
    lambda_of_alpha,
    mu_of_sigma,
)
from .special import gamma_fn, gammaln

__all__ = [
    "ExponentPair",
    "ProblemParams",
    "alpha_of_lambda",
    "characteristic_exponents",
    "gamma_exponent",
    "gamma_fn",
    "gammaln",
    "hardy_constant",
    "kappa",
    "lambda_of_alpha",
    "mu_of_sigma",
]
