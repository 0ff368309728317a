import numpy as np
import pytest

from sublab import semigroup as sg
from sublab.heatflow import random_bump_family
from sublab.models import make_model


def test_mass_and_second_moment(engine):
    assert engine.mass == pytest.approx(1.0, abs=1e-3)
    for t in (0.1, 0.5, 1.0):
        assert engine.apply(lambda a, b, c: 1.0 + 0 * a, np.zeros(3), t) == pytest.approx(1.0, abs=1e-3)
        assert engine.apply(lambda a, b, c: a * a, np.zeros(3), t) == pytest.approx(2 * t, rel=1e-3)


def test_chapman_kolmogorov(engine):
    lhs, rhs = sg.chapman_kolmogorov(engine, np.array([0.3, -0.2, 0.1]), 0.25)
    assert rhs == pytest.approx(lhs, rel=1e-3)


def test_mass_leak_detected():
    with pytest.raises(sg.MassLeakError):
        sg.QuadratureEngine(sg.GridSpec(halfwidth_h=1.0, halfwidth_v=0.5, n=16))


def test_positivity_and_contraction(engine, rng):
    x = rng.normal(size=(3, 4))
    ind = lambda a, b, c: (a * a + b * b < 1.0).astype(float)
    v = engine.apply(ind, x, 0.3)
    assert np.all(v >= 0) and np.all(v <= 1 + 1e-12)


def test_self_adjoint(engine):
    # int f P_t g = int g P_t f, both exact through the bump flow on a common grid
    xs = np.linspace(-4, 4, 33)
    zs = np.linspace(-6, 6, 41)
    X, Y, Z = np.meshgrid(xs, xs, zs, indexing="ij")
    pts = np.stack([X, Y, Z]).reshape(3, -1)
    w = (xs[1] - xs[0]) ** 2 * (zs[1] - zs[0])
    fe = random_bump_family(np.random.default_rng(2), eps=0.0)
    ge = random_bump_family(np.random.default_rng(3), eps=0.0)
    a = np.sum(fe(*pts) * ge.heat(pts, 0.2).u) * w
    b = np.sum(ge(*pts) * fe.heat(pts, 0.2).u) * w
    assert a == pytest.approx(b, rel=2e-3)


def test_gradient_mode(engine):
    f = random_bump_family(np.random.default_rng(4))
    x = np.array([0.1, 0.2, -0.1])
    d = sg.semigroup_grad(engine, f, x, 0.5)
    st = f.heat(x.reshape(3, 1), 0.5)
    assert d.xu == pytest.approx(st.xu[0], rel=1e-5, abs=1e-8)
    assert d.yu == pytest.approx(st.yu[0], rel=1e-5, abs=1e-8)
    assert d.zu == pytest.approx(st.zu[0], rel=1e-5, abs=1e-8)
    assert d.lu == pytest.approx(d.dt, rel=1e-3)


def test_gradient_of_constant(engine):
    d = sg.semigroup_grad(engine, lambda a, b, c: 1.0 + 0 * a, np.zeros(3), 0.4)
    assert abs(d.gamma_log) < 1e-12 and abs(d.lu) < 1e-8


def test_gradient_refuses_monte_carlo(heis):
    with pytest.raises(sg.EngineError):
        sg.semigroup_grad(sg.MonteCarloEngine(heis, 100), lambda a, b, c: a, np.zeros(3), 0.5)


def test_mc_moments(heis):
    mc = sg.MonteCarloEngine(heis, n_paths=40_000, seed=7)
    m, se = mc.apply(lambda a, b, c: a * a, np.zeros(3), 0.5)
    assert abs(m - 1.0) < 3 * se
    m, se = mc.apply(lambda a, b, c: c, np.zeros(3), 0.5)
    assert abs(m) < 3 * se


def test_mc_is_split_invariant(heis):
    # whole blocks are a prefix of any longer run with the same seed
    k = sg.MC_BLOCK
    a = sg.mc_paths(heis, np.zeros(3), 0.2, k, 0.004, seed=11)
    b = sg.mc_paths(heis, np.zeros(3), 0.2, k + 300, 0.004, seed=11)
    np.testing.assert_array_equal(a, b[:, :k])


def test_mc_rejects_coarse_step(heis):
    with pytest.raises(ValueError):
        sg.mc_paths(heis, np.zeros(3), 0.1, 10, 0.01)


def test_mc_on_curved_chart():
    m = make_model("g_rho1", 1.0)
    q = sg.mc_paths(m, np.zeros(3), 0.1, 20_000, 0.001, seed=5)
    # the horizontal energy grows like 4t to leading order in small time
    r2 = q[0] ** 2 + q[1] ** 2
    assert r2.mean() == pytest.approx(0.4, rel=0.05)
