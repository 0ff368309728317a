import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from sublab import h1kernel
from sublab.metric import ball_volume
from sublab.models import make_model


def _brute_density(rho2, z, t):
    # independent real-axis quadrature of the classical integral
    f = lambda u: (u / math.sinh(u) if u else 1.0) * math.exp(-rho2 / (4 * t) * (u / math.tanh(u) if u else 1.0)) \
        * math.cos(u * z / t)
    v, _ = integrate.quad(f, 0, 80, limit=2000, epsabs=1e-15, epsrel=1e-12)
    return 2 * v / (8 * math.pi**2 * t * t)


def test_origin_value():
    assert float(h1kernel.density(np.zeros(3), 1.0)) == pytest.approx(1 / 16, rel=1e-12)
    assert h1kernel.log_density_precise(0.0, 0.0, 1.0) == pytest.approx(math.log(1 / 16), abs=1e-12)


@pytest.mark.parametrize("rho2,z,t", [(0.5, 0.2, 1.0), (2.0, 1.0, 0.5), (0.0, 1.5, 0.3), (4.0, 0.0, 2.0)])
def test_evaluators_agree_with_brute_force(rho2, z, t):
    want = _brute_density(rho2, z, t)
    g = np.array([math.sqrt(rho2), 0.0, z])
    assert float(h1kernel.density(g, t)) == pytest.approx(want, rel=1e-9)
    assert math.exp(h1kernel.log_density_precise(rho2, z, t)) == pytest.approx(want, rel=1e-8)


def test_precise_kernel_in_far_tail():
    # far along the vertical axis the kernel is ~ e^{-d^2/4} times slowly varying factors
    z = 50.0
    lp = h1kernel.log_density_precise(0.0, z, 1.0)
    d2 = 4 * math.pi * z
    assert math.isfinite(lp)
    assert -d2 / 4 - 5 < lp < -d2 / 4 + 5


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(0.2, 2.0), st.floats(0.3, 3.0))
def test_dilation_scaling(g, t, lam):
    g = np.array(g)
    a = h1kernel.log_density_precise(lam**2 * (g[0] ** 2 + g[1] ** 2), lam**2 * g[2], lam**2 * t)
    b = h1kernel.log_density_precise(g[0] ** 2 + g[1] ** 2, g[2], t) - 4 * math.log(lam)
    assert abs(math.expm1(a - b)) < 1e-6


def test_kernel_symmetry(rng):
    for _ in range(5):
        x, y = rng.normal(size=(2, 3))
        assert float(h1kernel.kernel(x, y, 0.7)) == pytest.approx(float(h1kernel.kernel(y, x, 0.7)), rel=1e-12)


@pytest.mark.parametrize("t", [0.05, 0.25, 1.0, 4.0])
def test_ball_mass_partition(t):
    inside = h1kernel.ball_mass(1.0, t)
    comp = h1kernel.ball_complement_mass(1.0, t)
    assert 0 < inside < 1
    assert inside + comp == pytest.approx(1.0, abs=1e-12)


def test_ball_mass_is_dilation_invariant():
    assert h1kernel.ball_mass(2.0, 0.4) == pytest.approx(h1kernel.ball_mass(1.0, 0.1), rel=1e-12)


def test_ball_mass_decreases_in_time():
    vals = [h1kernel.ball_mass(1.0, t) for t in (0.05, 0.1, 0.2, 0.5, 1.0, 2.0)]
    assert np.all(np.diff(vals) < 0)


def test_unit_ball_volume_against_monte_carlo():
    v = h1kernel.unit_ball_volume()
    est = ball_volume(make_model("heisenberg"), np.zeros(3), 1.0, n=200_000, seed=3)
    assert abs(est.volume - v) < 4 * est.stderr
