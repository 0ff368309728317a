import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sublab import jets
from sublab.jets import Jet, JetOrderError, jet_eval, variables


def _fd_partial(f, p, i, h=1e-5):
    e = np.zeros(3)
    e[i] = h
    return (f(*(p + e)) - f(*(p - e))) / (2 * h)


def test_partials_of_product_match_closed_form():
    f = lambda x, y, t: jets.exp(x * y) * jets.sin(t)
    p = np.array([0.3, -0.7, 0.4])
    j = jet_eval(f, p.reshape(3, 1), 4)
    x, y, t = p
    assert j.partial((1, 0, 0))[0] == pytest.approx(y * math.exp(x * y) * math.sin(t), rel=1e-13)
    assert j.partial((0, 0, 2))[0] == pytest.approx(-math.exp(x * y) * math.sin(t), rel=1e-13)
    assert j.partial((1, 1, 1))[0] == pytest.approx((1 + x * y) * math.exp(x * y) * math.cos(t), rel=1e-12)
    assert j.partial((2, 1, 0))[0] == pytest.approx((2 * y + x * y * y) * math.exp(x * y) * math.sin(t), rel=1e-12)


def test_fourth_order_pure_partial():
    j = jet_eval(lambda x, y, t: jets.log(2.0 + x) + y**4, np.array([[0.5], [2.0], [0.0]]), 4)
    assert j.partial((4, 0, 0))[0] == pytest.approx(-6 / 2.5**4, rel=1e-13)
    assert j.partial((0, 4, 0))[0] == pytest.approx(24.0)


def test_gradient_against_finite_differences(rng):
    f = jets.random_test_function(rng)
    p = rng.uniform(-0.5, 0.5, size=3)
    g = jet_eval(f, p.reshape(3, 1), 2).gradient()[:, 0]
    fd = np.array([_fd_partial(lambda *q: f(*q), p, i) for i in range(3)])
    np.testing.assert_allclose(g, fd, rtol=1e-7, atol=1e-8)


def test_order_limit():
    with pytest.raises(JetOrderError):
        jet_eval(lambda x, y, t: x, np.zeros((3, 1)), 5)
    j = jet_eval(lambda x, y, t: x * y, np.zeros((3, 1)), 2)
    with pytest.raises(JetOrderError):
        j.partial((3, 0, 0))


def test_constant_function_jet():
    j = jet_eval(jets.constant(2.5), np.zeros((3, 4)), 3)
    assert np.all(j.c[1:] == 0)
    np.testing.assert_allclose(j.value, 2.5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.floats(0.2, 2.0))
def test_product_and_quotient_rules(p, a):
    q = variables(np.array(p).reshape(3, 1), 3)
    u = jets.exp(a * q[0]) + q[1] * q[2]
    v = jets.cos(q[0] - q[2]) + 2.0
    lhs = (u * v) / v
    np.testing.assert_allclose(lhs.c, u.c, rtol=1e-10, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-2, 2))
def test_power_and_sqrt_agree(x, y):
    q = variables(np.array([[x], [y], [0.0]]), 4)
    base = q[0] * q[0] + 1.0
    np.testing.assert_allclose(base.sqrt().c, base.power(0.5).c, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose((base.sqrt() * base.sqrt()).c, base.c, rtol=1e-12, atol=1e-12)


def test_jet_constructor_validates_shape():
    with pytest.raises(ValueError):
        Jet(np.zeros(3), 3, 1)
