import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gammaln

from wedgebound.numerics import (QuadratureError, QuadratureSpec, gauss_legendre, graded_rule,
                                 integrate_semi_infinite, integrate_unit, log_gamma)


def test_unit_interval_polynomial():
    res = integrate_unit(lambda x: 3 * x * x)
    assert res.converged
    assert res.value == pytest.approx(1.0, rel=1e-12)


def test_inverse_sqrt_endpoint():
    spec = QuadratureSpec(endpoint_hint="inverse_sqrt_at_zero")
    res = integrate_unit(lambda x: 1 / math.sqrt(x), spec)
    assert res.value == pytest.approx(2.0, rel=1e-10)


def test_semi_infinite_gamma_moment():
    res = integrate_semi_infinite(lambda r: r ** 3 * math.exp(-2 * r), scale=0.5)
    assert res.value == pytest.approx(6 / 16, rel=1e-10)


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate_unit(lambda x: float("nan"))


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(relative_tolerance=-1.0)
    with pytest.raises(ValueError):
        QuadratureSpec(endpoint_hint="bogus")


@given(st.floats(0.01, 300.0))
def test_log_gamma_matches_scipy(x):
    assert log_gamma(x) == pytest.approx(float(gammaln(x)), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("order", [4, 10, 20, 32])
def test_gauss_legendre_exactness(order):
    x, w = gauss_legendre(order)
    # nodes live on [0, 1]; the rule is exact up to degree 2*order - 1
    for deg in (2 * order - 2, 2 * order - 1):
        assert np.sum(w * x ** deg) == pytest.approx(1.0 / (deg + 1), rel=1e-12)


@given(st.floats(0.1, 3.0), st.floats(1e-4, 0.5))
def test_graded_rule_integrates_wall_layer(length, scale):
    x, w = graded_rule(length, scale)
    assert np.all(np.diff(x) > 0) and x[0] >= 0 and x[-1] <= length
    exact = scale * (1 - math.exp(-length / scale))
    assert np.sum(w * np.exp(-x / scale)) == pytest.approx(exact, rel=1e-9)
    assert np.sum(w) == pytest.approx(length, rel=1e-12)
