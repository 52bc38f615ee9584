import math

import numpy as np
import pytest

from fraclab.errors import DomainError
from fraclab.special import gamma_fn, gammaln

# Reference values computed once with a 50-digit arbitrary-precision
# evaluation, frozen here.
GAMMA_REFERENCE = {
    0.3: 2.9915689876875906283125165159,
    1.5: 0.886226925452758013649083741671,
    7.21: 1070.50507263060712249737366034,
    0.007: 142.286806452125431245295203981,
    33.3: 7.4875775965227066079920662546e35,
}
LGAMMA_REFERENCE = {140.25: 551.513392289554642895970606927}


def test_classical_values():
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-14)
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)


def test_high_precision_reference():
    for x, ref in GAMMA_REFERENCE.items():
        assert gamma_fn(x) == pytest.approx(ref, rel=1e-12)
    for x, ref in LGAMMA_REFERENCE.items():
        assert gammaln(x) == pytest.approx(ref, rel=1e-13)


def test_against_libm_sweep():
    xs = np.concatenate([
        np.linspace(0.01, 2.0, 211),
        np.linspace(2.0, 30.0, 113),
        np.geomspace(1e-4, 1e-2, 17),
    ])
    ours = gamma_fn(xs)
    libm = np.array([math.gamma(float(x)) for x in xs])
    assert np.max(np.abs(ours / libm - 1.0)) < 1e-12
    ours_log = gammaln(xs)
    libm_log = np.array([math.lgamma(float(x)) for x in xs])
    assert np.max(np.abs(ours_log - libm_log)) < 1e-11 * np.maximum(
        1.0, np.max(np.abs(libm_log))
    )


def test_recurrence_property():
    xs = np.linspace(0.05, 20.0, 401)
    lhs = gamma_fn(xs + 1.0)
    rhs = xs * gamma_fn(xs)
    assert np.max(np.abs(lhs / rhs - 1.0)) < 1e-13


def test_gammaln_consistent_with_gamma():
    xs = np.linspace(0.1, 100.0, 300)
    assert np.max(np.abs(gammaln(xs) - np.log(gamma_fn(xs)))) < 1e-10


def test_domain_errors():
    for bad in (0.0, -1.0, -0.5, math.nan):
        with pytest.raises(DomainError):
            gamma_fn(bad)
        with pytest.raises(DomainError):
            gammaln(bad)
