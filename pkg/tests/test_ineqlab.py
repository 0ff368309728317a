import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sublab import h1kernel, ineqlab as I
from sublab.heatflow import BumpFamily, GaussianBump, random_bump_family
from sublab.models import CDParams


def closed_form_G(u, Dstar):
    # primitive of g after v = s^{3/2}: partial fractions in s = u^{2/3}
    k = math.sqrt(Dstar / 2)
    s = u ** (2 / 3)
    return 3 / (2 * (1 - k)) * (math.log1p(s) - k * math.log1p(s / k))


def closed_form_C0(Dstar):
    k = math.sqrt(Dstar / 2)
    return 3 * k * math.log(k) / (2 * (1 - k))


@pytest.mark.parametrize("Dstar", [3.0, 10.0, 24.0])
@pytest.mark.parametrize("u", [1e-3, 0.5, 2.0, 40.0, 1e4])
def test_G_matches_closed_form(Dstar, u):
    assert I.G_eval(Dstar, u) == pytest.approx(closed_form_G(u, Dstar), rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("Dstar", [3.0, 10.0, 24.0])
def test_C0_against_closed_form(Dstar):
    c0, env = I.G_asymptote(Dstar)
    assert c0 == pytest.approx(closed_form_C0(Dstar), abs=1e-4)
    assert env < 1e-3


def test_g_limits():
    G = I.GFunction(10.0)
    assert abs(1e6 * float(G.g(1e6)) - 1) < 2e-2
    assert abs(math.sqrt(5) * 1e-6 ** (-1 / 3) * float(G.g(1e-6)) - 1) < 2e-2


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0))
def test_G_inverse(y):
    G = I.GFunction(10.0)
    assert G.G(G.G_inverse(y)) == pytest.approx(y, abs=1e-8)


def test_G_increasing():
    G = I.GFunction(10.0)
    vals = [G.G(u) for u in np.geomspace(1e-3, 1e3, 30)]
    assert np.all(np.diff(vals) > 0)


def test_constant_function_gives_zero(engine48):
    f = BumpFamily(0.7, (), ())
    assert I.entropy_phi(engine48, f, np.zeros(3), 0.5, 0.25) == (0.0, 0.0)
    cd = CDParams(0.0, 0.5, 1.0, 2.0)
    # only the engine's mass defect on the truncated box survives
    mass = engine48.apply(lambda a, b, c: 1.0, np.zeros(3), 0.5)
    expected = (1 + 2 * cd.kappa / cd.rho2) * 0.7 * np.log(0.7) * (mass - 1)
    assert I.reverse_ls_slack(engine48, f, np.zeros(3), 0.5, cd) == pytest.approx(expected, rel=1e-6, abs=1e-14)


def test_entropy_identity_single_bump(engine48):
    f = BumpFamily(1e-3, (0.999,), (GaussianBump((0.1, 0.0, 0.1), 1.0, 1.0),))
    res = I.entropy_identity(engine48, f, np.zeros(3), 0.25)
    assert res["rel_err"] < 1e-2
    assert np.all(res["phi1"] >= 0) and np.all(res["phi2"] >= 0)


def test_coefficient_identities():
    cd = CDParams(0.0, 0.5, 1.0, 2.0)
    for C in (0.0, 1.0, 3.0):
        assert max(I.coefficient_identities(0.5, 0.1, C, cd).values()) < 1e-9


def test_dim_reverse_ls_reduces_at_C0(engine):
    cd = CDParams(0.0, 0.5, 1.0, 2.0)
    f = random_bump_family(np.random.default_rng(9))
    snap = I.snapshot(engine, f, np.zeros(3), 0.5)
    a = I.dim_reverse_ls_terms(snap, 0.5, 0.0, 0.7, cd)["slack"]
    b = I.reverse_ls_terms(snap, 0.5, cd)["slack"]
    assert a == pytest.approx(b / cd.rho2, rel=1e-14)


def test_delta_penalty_monotone():
    vals = [math.log1p(1 / d) for d in (0.1, 0.5, 1, 2, 10, 100)]
    assert np.all(np.diff(vals) < 0)


def test_reverse_harnack_degenerate_and_consistent():
    G = I.GFunction(10.0)
    lp = I.log_complement(1.0)
    assert I.reverse_harnack_check(lp, 0.2, 0.2, G) == 0.0
    res = I.integrated_ode(lp, 0.1, 0.4, G)
    assert res["diff"] < 1e-6


def test_find_A_and_monotonicity():
    A = I.find_A(1.0)
    assert abs(I.key_estimate(1.0, A) - 0.5) < 1e-3
    assert I.key_estimate(1.0, 1e-4) > 0.99
    with pytest.raises(ValueError):
        I.find_A(1.0, lo=1.0, hi=10.0)


def test_small_time_rate_scaling():
    a = I.small_time_rate(0.5)["estimate"]
    b = I.small_time_rate(1.0)["estimate"]
    assert b == pytest.approx(4 * a, rel=1e-8)


def test_harnack_constant():
    assert I.harnack_constant(CDParams(0.0, 0.5, 1.0, 2.0)) == pytest.approx(16 * math.e)


def test_parabolic_box_validation():
    with pytest.raises(ValueError):
        I.ParabolicBox(beta=0.6)


def test_poincare_rejects_constant(heis):
    from sublab import jets
    with pytest.raises(ValueError):
        I.poincare_check(heis, np.zeros(3), 1.0, [jets.constant(1.0)], k=10)
