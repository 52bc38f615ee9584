import math

import numpy as np
import pytest

from fraclab.constants import (
    ProblemParams,
    alpha_of_lambda,
    characteristic_exponents,
    gamma_exponent,
    hardy_constant,
    kappa,
    lambda_of_alpha,
    mu_of_sigma,
)
from fraclab.errors import DomainError
from fraclab.special import gamma_fn

# Frozen 50-digit references.
KAPPA_QUARTER = 0.477988797486124995363820001995
KAPPA_THREE_QUARTER = 2.09209924010620329790432425685
HARDY_2_HALF = 0.228473290522231812687483311274
HARDY_4_HALF = 1.09421980761323831941838497035
LAMBDA_3_03_07 = 0.593722053867937039317328286949
LAMBDA_4_06_10 = 0.591001153222953398389771398653


class TestKappa:
    def test_half_is_one(self):
        assert kappa(0.5) == pytest.approx(1.0, rel=1e-14)

    def test_quarter_values(self):
        assert kappa(0.25) == pytest.approx(KAPPA_QUARTER, rel=1e-12)
        assert kappa(0.75) == pytest.approx(KAPPA_THREE_QUARTER, rel=1e-12)
        # closed form sqrt(2) Gamma(3/4)/Gamma(1/4)
        ref = math.sqrt(2.0) * gamma_fn(0.75) / gamma_fn(0.25)
        assert kappa(0.25) == pytest.approx(ref, rel=1e-13)

    def test_product_identity(self):
        for s in np.linspace(0.02, 0.98, 49):
            assert kappa(s) * kappa(1.0 - s) == pytest.approx(1.0, abs=1e-12)

    def test_domain(self):
        for bad in (0.0, 1.0, -0.2, 1.4):
            with pytest.raises(DomainError):
                kappa(bad)


class TestHardyConstant:
    def test_three_half(self):
        assert hardy_constant(3, 0.5) == pytest.approx(2.0 / math.pi, rel=1e-13)

    def test_frozen(self):
        assert hardy_constant(2, 0.5) == pytest.approx(HARDY_2_HALF, rel=1e-12)
        assert hardy_constant(4, 0.5) == pytest.approx(HARDY_4_HALF, rel=1e-12)

    def test_positive(self):
        for N in (1, 2, 3, 5, 9):
            for s in (0.1, 0.45, 0.8):
                if N > 2 * s:
                    assert hardy_constant(N, s) > 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            hardy_constant(1, 0.75)


class TestLambdaOfAlpha:
    def test_alpha_zero_is_hardy_constant(self):
        p = ProblemParams(3, 0.5)
        assert lambda_of_alpha(p, 0.0) == pytest.approx(
            hardy_constant(3, 0.5), rel=1e-13
        )

    def test_closed_case(self):
        p = ProblemParams(3, 0.5)
        assert lambda_of_alpha(p, 0.5) == pytest.approx(0.5, rel=1e-13)

    def test_frozen(self):
        assert lambda_of_alpha(ProblemParams(3, 0.3), 0.7) == pytest.approx(
            LAMBDA_3_03_07, rel=1e-12
        )
        assert lambda_of_alpha(ProblemParams(4, 0.6), 1.0) == pytest.approx(
            LAMBDA_4_06_10, rel=1e-12
        )

    def test_strictly_decreasing_on_grid(self):
        for (N, s) in ((3, 0.5), (2, 0.3), (4, 0.75)):
            p = ProblemParams(N, s)
            half = (N - 2 * s) / 2.0
            grid = np.linspace(0.0, half * (1.0 - 1e-9), 100)
            vals = [lambda_of_alpha(p, a) for a in grid]
            assert all(v1 > v2 for v1, v2 in zip(vals, vals[1:]))

    def test_endpoint_limit(self):
        p = ProblemParams(3, 0.5)
        half = 1.0
        assert lambda_of_alpha(p, half * (1.0 - 1e-12)) < 1e-10

    def test_domain(self):
        p = ProblemParams(3, 0.5)
        for bad in (-0.1, 1.0, 2.0):
            with pytest.raises(DomainError):
                lambda_of_alpha(p, bad)


class TestAlphaOfLambda:
    def test_closed_inverse(self):
        p = ProblemParams(3, 0.5)
        assert alpha_of_lambda(p, 0.5) == pytest.approx(0.5, abs=1e-11)

    def test_roundtrip(self):
        for (N, s) in ((3, 0.5), (2, 0.35), (5, 0.7)):
            p = ProblemParams(N, s)
            alpha = 0.3 * (N - 2 * s) / 2.0
            lam = lambda_of_alpha(p, alpha)
            assert alpha_of_lambda(p, lam) == pytest.approx(alpha, abs=1e-11)

    def test_near_hardy_constant_gives_small_alpha(self):
        p = ProblemParams(3, 0.5)
        lam = hardy_constant(3, 0.5) * (1.0 - 1e-8)
        assert alpha_of_lambda(p, lam) < 1e-3

    def test_domain(self):
        p = ProblemParams(3, 0.5)
        for bad in (0.0, -1.0, hardy_constant(3, 0.5), 10.0):
            with pytest.raises(DomainError):
                alpha_of_lambda(p, bad)


class TestCharacteristicExponents:
    def test_mu_zero(self):
        p = ProblemParams(3, 0.5)
        pair = characteristic_exponents(p, 0.0)
        assert pair.sigma_plus == pytest.approx(0.0, abs=1e-15)
        assert pair.sigma_minus == pytest.approx(-2.0, abs=1e-15)

    def test_perfect_square(self):
        p = ProblemParams(3, 0.5)
        mu = p.N + 1.0 - 2.0 * p.s
        assert characteristic_exponents(p, mu).sigma_plus == pytest.approx(
            1.0, rel=1e-14
        )

    def test_trace_rate_case(self):
        p = ProblemParams(3, 0.5)
        assert characteristic_exponents(p, -0.75).sigma_plus == pytest.approx(
            -0.5, rel=1e-14
        )

    def test_root_relations_random(self):
        rng = np.random.default_rng(42)
        p = ProblemParams(3, 0.5)
        a = p.N - 2.0 * p.s
        mus = rng.uniform(-((a / 2) ** 2) * 0.999, 50.0, size=1000)
        for mu in mus:
            pair = characteristic_exponents(p, mu)
            assert pair.sigma_plus + pair.sigma_minus == pytest.approx(-a, abs=1e-12)
            assert pair.sigma_plus * pair.sigma_minus == pytest.approx(
                -mu, abs=1e-11 * max(1.0, abs(mu))
            )
            assert pair.sigma_plus >= pair.sigma_minus

    def test_domain(self):
        p = ProblemParams(3, 0.5)
        with pytest.raises(DomainError):
            characteristic_exponents(p, -1.0)
        with pytest.raises(DomainError):
            characteristic_exponents(p, -25.0)


class TestGammaExponent:
    def test_alias(self):
        p = ProblemParams(3, 0.5)
        for mu in (-0.75, 0.0, 3.0, 17.2):
            assert gamma_exponent(p, mu) == characteristic_exponents(p, mu).sigma_plus

    def test_strictly_increasing(self):
        p = ProblemParams(3, 0.5)
        mus = np.linspace(-0.99, 40.0, 300)
        vals = [gamma_exponent(p, m) for m in mus]
        assert all(v1 < v2 for v1, v2 in zip(vals, vals[1:]))

    def test_mu_sigma_identity(self):
        p = ProblemParams(2, 0.4)
        for mu in np.linspace(-((p.N - 2 * p.s) / 2) ** 2 * 0.99, 30.0, 77):
            sigma = gamma_exponent(p, mu)
            assert mu_of_sigma(p, sigma) == pytest.approx(
                mu, abs=1e-10 * max(1.0, abs(mu))
            )


class TestProblemParams:
    def test_validation(self):
        with pytest.raises(DomainError):
            ProblemParams(1, 0.6)  # N <= 2s
        with pytest.raises(DomainError):
            ProblemParams(3, 1.2)
        with pytest.raises(DomainError):
            ProblemParams(3, 0.5, hardy_constant(3, 0.5))

    def test_accessors(self):
        p = ProblemParams(3, 0.5, 0.5)
        assert p.a == pytest.approx(2.0)
        assert p.kappa == pytest.approx(1.0)
        assert p.critical_exponent == pytest.approx(3.0)
