import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sublab.metric import (BOX_CZ, ball_box, ball_lattice, ball_volume, cc_distance, doubling_report, h1_norm,
                           h1_sphere_point, shoot_distance)
from sublab.models import dilate, h1_inv, h1_mul, make_model

pts = st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3).map(np.array)


@pytest.mark.parametrize("y", [(0.5, 0.0, 0.0), (0.0, 0.0, 0.3), (0.4, -0.3, 0.25), (0.2, 0.1, -0.6)])
def test_closed_form_against_shooting(heis, y):
    res = shoot_distance(heis, np.zeros(3), np.array(y))
    assert res.converged
    assert res.distance == pytest.approx(h1_norm(np.array(y)), rel=1e-6)


def test_special_values():
    assert h1_norm(np.array([0.7, 0.0, 0.0])) == pytest.approx(0.7)
    assert h1_norm(np.array([0.0, 0.0, 1.0])) == pytest.approx(2 * math.sqrt(math.pi))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.01, 2 * math.pi - 0.01), st.floats(0, 2 * math.pi))
def test_sphere_parametrization(r, th, phi):
    assert h1_norm(h1_sphere_point(r, th, phi)) == pytest.approx(r, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(pts, pts, pts)
def test_triangle_inequality(a, b, c):
    heis = make_model("heisenberg")
    d = lambda p, q: float(cc_distance(heis, p, q))
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-6


@settings(max_examples=60, deadline=None)
@given(pts, pts, pts, st.floats(0.2, 4))
def test_invariances(g, x, y, lam):
    heis = make_model("heisenberg")
    d = float(cc_distance(heis, x, y))
    assert float(cc_distance(heis, h1_mul(g, x), h1_mul(g, y))) == pytest.approx(d, rel=1e-9, abs=1e-9)
    assert float(cc_distance(heis, dilate(heis, lam, x), dilate(heis, lam, y))) == pytest.approx(lam * d, rel=1e-9,
                                                                                              abs=1e-9)
    assert d >= math.hypot(*(y - x)[:2]) - 1e-12


@pytest.mark.parametrize("rho", [1.0, -1.0])
def test_shooting_on_curved_charts(rho):
    m = make_model("g_rho1", rho)
    y = np.array([0.3, 0.2, 0.1])
    res = shoot_distance(m, np.zeros(3), y)
    assert res.converged
    assert res.distance >= math.hypot(0.3, 0.2) * 0.9
    assert res.distance == pytest.approx(float(cc_distance(m, np.zeros(3), y)))


def test_box_contains_ball():
    # the vertical extent of B(0, r) is r^2/(2 pi), reached on the sphere at theta = pi
    th = np.linspace(0.01, 2 * np.pi - 0.01, 2001)
    z = h1_sphere_point(1.0, th)[2]
    assert z.max() == pytest.approx(1 / (2 * np.pi), rel=1e-6)
    np.testing.assert_allclose(ball_box(2.0), [2.0, 2.0, 4 * BOX_CZ])


def test_ball_volume_methods_agree(heis):
    mc = ball_volume(heis, np.array([0.3, 0.1, -0.2]), 1.0, n=100_000, seed=1)
    exact = ball_volume(heis, np.zeros(3), 1.0, method="quadrature")
    lat = ball_volume(heis, np.zeros(3), 1.0, n=64_000, method="lattice")
    assert abs(mc.volume - exact.volume) < 4 * mc.stderr
    assert lat.volume == pytest.approx(exact.volume, rel=1e-2)


def test_volume_monotone_in_radius(heis):
    vols = [ball_volume(heis, np.zeros(3), r, n=20_000, seed=5).volume for r in (0.5, 0.8, 1.0)]
    assert vols[0] < vols[1] < vols[2]


def test_lattice_is_dilation_covariant(heis):
    p1, c1 = ball_lattice(heis, np.zeros(3), 1.0, 20)
    p2, c2 = ball_lattice(heis, np.zeros(3), 2.0, 20)
    np.testing.assert_allclose(dilate(heis, 2.0, p1), p2, rtol=1e-12)
    assert c2 == pytest.approx(16 * c1)


def test_doubling_small(heis):
    rep = doubling_report(heis, [np.zeros(3)], [1.0], n=40_000, seed=2, t_grid=[0.5, 1.0])
    row = rep["rows"][0]
    assert abs(row.ratio - 16) < 4 * row.stderr
