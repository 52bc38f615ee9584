"""Closed-form constants and exponents of the fractional Hardy problem.

Everything here is an explicit Gamma-function expression: the trace
normalization kappa(s), the sharp Hardy constant, the monotone map
alpha -> lambda(alpha) linking the Hardy coupling to the homogeneity of
the explicit extremal extension, and the characteristic exponents of the
radial Euler equation attached to an angular eigenvalue mu.
"""

import math
from dataclasses import dataclass

from .errors import DomainError
from .special import gamma_fn, gammaln

_ALPHA_BISECT_TOL = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """Problem data (N, s, lambda) for the Hardy-Schrodinger operator.

    Requires N > 2s, s in (0,1), and a coupling strictly below the sharp
    Hardy constant.
    """

    N: int
    s: float
    lam: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError("N must be a positive integer")
        if not (0.0 < self.s < 1.0):
            raise DomainError("s must lie in (0, 1)")
        if not (self.N > 2.0 * self.s):
            raise DomainError("need N > 2s")
        if not (self.lam < hardy_constant(self.N, self.s)):
            raise DomainError(
                "lambda must be strictly below the Hardy constant "
                f"{hardy_constant(self.N, self.s):.12g}"
            )

    @property
    def a(self):
        """Shorthand for N - 2s, the homogeneity degree of the operator."""
        return self.N - 2.0 * self.s

    @property
    def kappa(self):
        return kappa(self.s)

    @property
    def hardy_constant(self):
        return hardy_constant(self.N, self.s)

    @property
    def critical_exponent(self):
        """The trace-critical exponent 2N/(N-2s)."""
        return 2.0 * self.N / (self.N - 2.0 * self.s)


@dataclass(frozen=True)
class ExponentPair:
    """Roots sigma^+ >= sigma^- of sigma^2 + (N-2s) sigma - mu = 0."""

    sigma_plus: float
    sigma_minus: float
    mu: float


def kappa(s):
    """Normalization constant Gamma(1-s) / (2^(2s-1) Gamma(s)) for s in (0,1)."""
    if not (0.0 < s < 1.0):
        raise DomainError("kappa requires s in (0, 1)")
    return gamma_fn(1.0 - s) / (2.0 ** (2.0 * s - 1.0) * gamma_fn(s))


def hardy_constant(N, s):
    """Sharp fractional Hardy constant 2^(2s) Gamma^2((N+2s)/4) / Gamma^2((N-2s)/4)."""
    if not (0.0 < s < 1.0):
        raise DomainError("hardy_constant requires s in (0, 1)")
    if not (N > 2.0 * s):
        raise DomainError("hardy_constant requires N > 2s")
    ratio = gamma_fn((N + 2.0 * s) / 4.0) / gamma_fn((N - 2.0 * s) / 4.0)
    return 2.0 ** (2.0 * s) * ratio * ratio


def lambda_of_alpha(params, alpha):
    """Coupling lambda(alpha) whose extremal extension is homogeneous of
    degree (2s-N)/2 + alpha.

    Defined for 0 <= alpha < (N-2s)/2; continuous up to alpha = 0 where it
    equals the Hardy constant, strictly decreasing, and vanishing at the
    right endpoint.  Evaluated through log-Gamma so the Gamma(0+) blow-up
    in the denominator near the endpoint underflows cleanly to 0.
    """
    N, s = params.N, params.s
    half = (N - 2.0 * s) / 2.0
    if not (0.0 <= alpha < half):
        raise DomainError(f"alpha must lie in [0, {half:.12g})")
    if alpha == 0.0:
        return hardy_constant(N, s)
    log_num = gammaln((N + 2.0 * s + 2.0 * alpha) / 4.0) + gammaln(
        (N + 2.0 * s - 2.0 * alpha) / 4.0
    )
    log_den = gammaln((N - 2.0 * s - 2.0 * alpha) / 4.0) + gammaln(
        (N - 2.0 * s + 2.0 * alpha) / 4.0
    )
    return 2.0 ** (2.0 * s) * math.exp(log_num - log_den)


def alpha_of_lambda(params, lam):
    """Inverse of lambda_of_alpha by bisection, resolved to |dalpha| <= 1e-12.

    Valid for 0 < lambda < Lambda_{N,s}; monotonicity of lambda(alpha)
    makes the bisection unconditionally convergent.
    """
    N, s = params.N, params.s
    lam_max = hardy_constant(N, s)
    if not (0.0 < lam < lam_max):
        raise DomainError(f"lambda must lie in (0, {lam_max:.12g})")
    half = (N - 2.0 * s) / 2.0
    lo, hi = 0.0, half  # lambda(lo) = Lambda > lam, lambda(hi-) = 0 < lam
    while hi - lo > _ALPHA_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if lambda_of_alpha(params, mid) > lam:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def characteristic_exponents(params, mu):
    """Both roots of the radial indicial equation for angular eigenvalue mu.

    Requires mu > -((N-2s)/2)^2 (the discriminant bound satisfied by every
    eigenvalue of the weighted half-sphere problem).
    """
    half = (params.N - 2.0 * params.s) / 2.0
    disc = half * half + mu
    if disc <= 0.0:
        raise DomainError("mu must exceed -((N-2s)/2)^2")
    root = math.sqrt(disc)
    return ExponentPair(sigma_plus=-half + root, sigma_minus=-half - root, mu=mu)


def gamma_exponent(params, mu):
    """The vanishing-order exponent: the sigma^+ root for eigenvalue mu."""
    return characteristic_exponents(params, mu).sigma_plus


def mu_of_sigma(params, sigma):
    """Inverse map sigma -> sigma^2 + (N-2s) sigma."""
    return sigma * sigma + (params.N - 2.0 * params.s) * sigma
