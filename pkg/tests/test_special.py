import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hpz.special import (CROSSOVER, asymptotic_I, series_I, special_I, special_I1, special_I2,
                         special_I3, special_I4)

mpmath.mp.dps = 50


def ref_I(x):
    x = mpmath.mpf(x)
    return mpmath.log(x) + mpmath.euler - (mpmath.exp(-x) * mpmath.ei(x) + mpmath.exp(x) * mpmath.ei(-x)) / 2


@pytest.mark.parametrize("x", [1e-6, 1e-3, 0.1, 1.0, 3.0, 10.0, 12.0, 29.9, 30.1, 50.0, 200.0, 1e4])
def test_I_matches_mpmath(x):
    assert special_I(x) == pytest.approx(float(ref_I(x)), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("order,fn", [(1, special_I1), (2, special_I2), (3, special_I3), (4, special_I4)])
@pytest.mark.parametrize("x", [0.05, 1.0, 7.0, 25.0, 40.0])
def test_derivatives_match_mpmath(order, fn, x):
    ref = float(mpmath.diff(ref_I, x, order))
    assert fn(x) == pytest.approx(ref, rel=1e-10, abs=1e-14)


@given(st.floats(1e-4, 400.0))
def test_derivative_identities(x):
    assert special_I3(x) == pytest.approx(special_I1(x) - 1 / x, rel=1e-12, abs=1e-14)
    assert special_I4(x) == pytest.approx(special_I2(x) + 1 / x**2, rel=1e-12, abs=1e-14)


@given(st.floats(1e-3, 500.0))
def test_I_is_increasing_and_concave_late(x):
    assert special_I1(x) > 0
    assert special_I(x * 1.01) > special_I(x)


def test_branches_agree_at_crossover():
    assert abs(series_I(CROSSOVER) - asymptotic_I(CROSSOVER)) < 1e-13
    # the asymptotic series alone is not good enough at x = 12
    assert abs(series_I(12.0) - asymptotic_I(12.0)) > 1e-7


def test_small_and_large_x_limits():
    assert special_I(0.0) == 0.0
    x = 1e5
    assert special_I(x) == pytest.approx(np.log(x) + np.euler_gamma - 1 / x**2, rel=1e-15)


def test_vector_input_and_domain():
    xs = np.array([0.5, 5.0, 50.0])
    assert np.allclose(special_I(xs), [special_I(v) for v in xs], rtol=0, atol=0)
    with pytest.raises(ValueError):
        special_I(-1.0)
