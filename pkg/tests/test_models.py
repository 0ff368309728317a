import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sublab import jets
from sublab.models import (CDParams, ModelError, VectorField, bracket_check, dilate, h1_inv, h1_mul,
                           make_model)


@pytest.mark.parametrize("kind,rho", [("heisenberg", 0.0), ("g_rho1", 1.0), ("g_rho1", -1.0),
                                      ("g_rho1", 0.0), ("g_rho1", 2.5)])
def test_structure_relations(kind, rho, rng):
    m = make_model(kind, rho)
    res = bracket_check(m, m.sample_points(rng, 50))
    assert max(res.values()) < 1e-10


def test_g_rho1_at_zero_matches_heisenberg_brackets(rng):
    m = make_model("g_rho1", 0.0)
    assert m.has_dilations


def test_custom_model_with_wrong_brackets_rejected():
    X = VectorField((lambda x, y, t: 1.0 + 0 * x, lambda x, y, t: 0 * x, lambda x, y, t: 0 * x), "X")
    Y = VectorField((lambda x, y, t: 0 * x, lambda x, y, t: 1.0 + 0 * x, lambda x, y, t: x), "Y")
    Z = VectorField((lambda x, y, t: 0 * x, lambda x, y, t: 0 * x, lambda x, y, t: 1.0 + 0 * x), "Z")
    # [X, Y] = Z holds, but [X, Z] = 0 while rho1 = 1 demands -Y
    make_model("custom", 0.0, horizontal=(X, Y), vertical=(Z,))
    with pytest.raises(ModelError):
        make_model("custom", 1.0, horizontal=(X, Y), vertical=(Z,))


def test_unknown_kind():
    with pytest.raises(ModelError):
        make_model("sphere")
    with pytest.raises(ModelError):
        make_model("heisenberg", 1.0)


def test_cd_constants():
    cd = CDParams(0.0, 0.5, 1.0, 2.0)
    assert cd.D == 8.0
    assert cd.Dstar == 10.0
    with pytest.raises(ValueError):
        CDParams(0.0, 0.0, 1.0, 2.0)


def test_dilation_only_on_carnot():
    with pytest.raises(ModelError):
        dilate(make_model("g_rho1", 1.0), 2.0, np.zeros(3))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9), st.floats(0.1, 5))
def test_group_law(v, lam):
    heis = make_model("heisenberg")
    a, b, c = np.array(v).reshape(3, 3)
    np.testing.assert_allclose(h1_mul(h1_mul(a, b), c), h1_mul(a, h1_mul(b, c)), atol=1e-11)
    np.testing.assert_allclose(h1_mul(a, h1_inv(a)), np.zeros(3), atol=1e-12)
    # dilations are automorphisms
    np.testing.assert_allclose(dilate(heis, lam, h1_mul(a, b)), h1_mul(dilate(heis, lam, a), dilate(heis, lam, b)),
                               rtol=1e-12, atol=1e-10)


def test_fields_are_left_invariant(rng):
    heis = make_model("heisenberg")
    g = rng.normal(size=3)
    p = rng.normal(size=(3, 5))
    f = lambda x, y, t: jets.sin(x) * y + t * t
    shifted = lambda x, y, t: f(*h1_mul_jet(g, (x, y, t)))
    fj = jets.jet_eval(shifted, p, 1)
    lhs = heis.X.apply(fj, p).value
    gp = h1_mul(g[:, None], p)
    rhs = heis.X.apply(jets.jet_eval(f, gp, 1), gp).value
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def h1_mul_jet(a, q):
    x, y, t = q
    return a[0] + x, a[1] + y, a[2] + t + 0.5 * (a[0] * y - a[1] * x)
