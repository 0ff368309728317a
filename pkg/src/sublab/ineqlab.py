"""Entropy functionals, reverse log-Sobolev and reverse Harnack inequalities,
the key heat-mass estimate, Gaussian bounds, Poincare and parabolic Harnack.

All checks run on the Heisenberg group with left-translated Gaussian bump
families (exact heat flow) or with indicators of balls seen from their
centre (exact boundary integrals).  Outer heat semigroups go through the
kernel-quadrature engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from . import h1kernel
from . import jets
from .gamma import gamma_sum_of_squares
from .heatflow import BumpFamily
from .metric import ball_lattice, cc_distance, h1_norm, h1_sphere_point
from .models import CDParams, ModelSpace, dilate
from .semigroup import QuadratureEngine

Array = np.ndarray


def _field(fn):
    # adapt a function of stacked points to the engine's (a, b, c) convention
    return lambda a, b, c: fn(np.stack(np.broadcast_arrays(a, b, c)))


def simpson_weights(n: int, T: float) -> Array:
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of nodes >= 3")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (T / (n - 1)) / 3.0


# entropy functionals -----------------------------------------------------------

@dataclass
class SemigroupSnapshot:
    """Everything about P_T f at x used by the reverse log-Sobolev family."""

    pf: float
    gamma_log: float
    gamma_z_log: float
    lpf: float
    p_flogf: float
    p_f_gamma_log: float      # P_T(f Gamma(ln f))
    p_f_gammaz_log: float     # P_T(f Gamma^Z(ln f))

    @property
    def entropy(self) -> float:
        return self.p_flogf - self.pf * math.log(self.pf)


def snapshot(engine: QuadratureEngine, f: BumpFamily, x, T: float) -> SemigroupSnapshot:
    x = np.asarray(x, dtype=float).reshape(3, 1)
    hs = f.heat(x, T)

    def flogf(q):
        v = f.heat(q, 0.0).u
        return v * np.log(v)

    def f_gl(q):
        s = f.heat(q, 0.0)
        return s.gamma / s.u

    def f_gzl(q):
        s = f.heat(q, 0.0)
        return s.gamma_z / s.u

    x0 = x[:, 0]
    return SemigroupSnapshot(
        pf=float(hs.u[0]), gamma_log=float(hs.gamma_log[0]), gamma_z_log=float(hs.gamma_z_log[0]),
        lpf=float(hs.lu[0]),
        p_flogf=engine.apply(_field(flogf), x0, T),
        p_f_gamma_log=engine.apply(_field(f_gl), x0, T),
        p_f_gammaz_log=engine.apply(_field(f_gzl), x0, T),
    )


def entropy_phi(engine: QuadratureEngine, f: BumpFamily, x, T: float, t: float) -> tuple[float, float]:
    """(Phi_1(t), Phi_2(t)) = P_t(u Gamma(ln u))(x), P_t(u Gamma^Z(ln u))(x), u = P_{T-t} f."""
    if not 0.0 <= t <= T:
        raise ValueError("need 0 <= t <= T")
    x = np.asarray(x, dtype=float).reshape(3)
    s = T - t

    def inner(q):
        st = f.heat(q, s)
        if np.any(st.u <= 0):
            raise ValueError("inner semigroup lost positivity")
        return np.stack([st.gamma / st.u, st.gamma_z / st.u])

    if t == 0.0:
        v = inner(x[:, None])[:, 0]
        return float(v[0]), float(v[1])
    q = engine.points(x, t)
    vals = inner(q) @ engine.weights
    return float(vals[0]), float(vals[1])


def phi_profile(engine, f, x, T: float, n: int = 9) -> tuple[Array, Array, Array]:
    ts = np.linspace(0.0, T, n)
    vals = np.array([entropy_phi(engine, f, x, T, t) for t in ts])
    return ts, vals[:, 0], vals[:, 1]


def entropy_identity(engine, f: BumpFamily, x, T: float, n: int = 9) -> dict:
    """Compare int_0^T Phi_1 with P_T(f ln f) - P_T f ln P_T f."""
    ts, p1, p2 = phi_profile(engine, f, x, T, n)
    lhs = float(simpson_weights(n, T) @ p1)
    snap = snapshot(engine, f, x, T)
    rhs = snap.entropy
    return {"integral": lhs, "entropy": rhs, "rel_err": abs(lhs - rhs) / max(abs(rhs), 1e-300),
            "phi1": p1, "phi2": p2, "times": ts, "snapshot": snap}


# master inequality ------------------------------------------------------------------

@dataclass(frozen=True)
class MasterCoefficients:
    """C^1 coefficient functions a, b >= 0 and gamma, with derivatives."""

    a: Callable
    da: Callable
    b: Callable
    db: Callable
    g: Callable
    label: str = ""

    @classmethod
    def constant(cls, a=1.0, b=1.0, g=0.0):
        return cls(lambda t: a + 0 * t, lambda t: 0 * t, lambda t: b + 0 * t, lambda t: 0 * t,
                   lambda t: g + 0 * t, f"a={a:g}, b={b:g}, gamma={g:g}")

    @classmethod
    def reverse_log_sobolev(cls, T: float, tau: float, C: float, cd: CDParams):
        s = lambda t: T + tau - t
        return cls(lambda t: s(t) / cd.rho2, lambda t: -1.0 / cd.rho2 + 0 * t,
                   lambda t: s(t) ** 2, lambda t: -2.0 * s(t),
                   lambda t: C / s(t), f"tau={tau:g}, C={C:g}")


def master_terms(engine, f: BumpFamily, x, T: float, coef: MasterCoefficients, cd: CDParams,
                 n: int = 9, profile=None, snap=None) -> dict:
    ts, p1, p2 = profile if profile is not None else phi_profile(engine, f, x, T, n)
    snap = snap or snapshot(engine, f, x, T)
    w = simpson_weights(len(ts), T)
    a, da, b, db, g = coef.a(ts), coef.da(ts), coef.b(ts), coef.db(ts), coef.g(ts)
    c1 = da + 2 * cd.rho1 * a - 2 * cd.kappa * a * a / b - 4 * a * g / cd.m
    c2 = db + 2 * cd.rho2 * a
    lhs = (coef.a(T) * snap.p_f_gamma_log + coef.b(T) * snap.p_f_gammaz_log
           - coef.a(0.0) * snap.pf * snap.gamma_log - coef.b(0.0) * snap.pf * snap.gamma_z_log)
    terms = [w @ (c1 * p1), w @ (c2 * p2), 4.0 / cd.m * (w @ (a * g)) * snap.lpf,
             -2.0 / cd.m * (w @ (a * g * g)) * snap.pf]
    rhs = float(sum(terms))
    scale = max(abs(lhs), *(abs(v) for v in terms), 1e-300)
    return {"lhs": float(lhs), "rhs": rhs, "slack": float(lhs - rhs), "scale": float(scale),
            "c1": c1, "c2": c2}


def master_inequality_check(engine, f, x, T, coef: MasterCoefficients, cd: CDParams, n: int = 9) -> float:
    """LHS - RHS of the entropy master inequality for coefficients (a, b, gamma)."""
    return master_terms(engine, f, x, T, coef, cd, n)["slack"]


def reverse_ls_display(snap: SemigroupSnapshot, T: float, tau: float, C: float, cd: CDParams) -> dict:
    """Slack of the tau-regularized reverse log-Sobolev inequality, written with the entropy."""
    k = 1.0 + 2 * cd.kappa / cd.rho2 + 4 * C / cd.m
    lhs = tau / cd.rho2 * snap.p_f_gamma_log + tau**2 * snap.p_f_gammaz_log + k / cd.rho2 * snap.entropy
    rhs = ((T + tau) / cd.rho2 * snap.pf * snap.gamma_log + (T + tau) ** 2 * snap.pf * snap.gamma_z_log
           + 4 * C * T / (cd.rho2 * cd.m) * snap.lpf
           - 2 * C * C / (cd.m * cd.rho2) * math.log1p(T / tau) * snap.pf)
    return {"lhs": lhs, "rhs": rhs, "slack": lhs - rhs, "scale": max(abs(lhs), abs(rhs))}


def coefficient_identities(T: float, tau: float, C: float, cd: CDParams, n: int = 201) -> dict:
    """Max residuals of the closed forms taken by the reverse log-Sobolev coefficients."""
    coef = MasterCoefficients.reverse_log_sobolev(T, tau, C, cd)
    ts = np.linspace(0.0, T, n)
    a, da, b, db, g = coef.a(ts), coef.da(ts), coef.b(ts), coef.db(ts), coef.g(ts)
    c1 = da - 2 * cd.kappa * a * a / b - 4 * a * g / cd.m
    want = -(1.0 / cd.rho2) * (1 + 2 * cd.kappa / cd.rho2 + 4 * C / cd.m)
    i1 = integrate.quad(lambda t: 4 * coef.a(t) * coef.g(t) / cd.m, 0, T)[0]
    i2 = integrate.quad(lambda t: -2 * coef.a(t) * coef.g(t) ** 2 / cd.m, 0, T)[0]
    return {
        "phi1_coefficient": float(np.max(np.abs(c1 - want))),
        "phi2_coefficient": float(np.max(np.abs(db + 2 * cd.rho2 * a))),
        "drift_integral": abs(i1 - 4 * C * T / (cd.rho2 * cd.m)),
        "log_integral": abs(i2 + 2 * C * C / (cd.m * cd.rho2) * math.log1p(T / tau)),
    }


# reverse log-Sobolev inequalities ----------------------------------------------------

def reverse_ls_terms(snap: SemigroupSnapshot, t: float, cd: CDParams) -> dict:
    lhs = t * snap.pf * snap.gamma_log + cd.rho2 * t * t * snap.pf * snap.gamma_z_log
    rhs = (1 + 2 * cd.kappa / cd.rho2) * snap.entropy
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "scale": max(abs(lhs), abs(rhs), 1e-300)}


def reverse_ls_slack(engine, f, x, t: float, cd: CDParams) -> float:
    return reverse_ls_terms(snapshot(engine, f, x, t), t, cd)["slack"]


def dim_reverse_ls_terms(snap: SemigroupSnapshot, t: float, C: float, delta: float, cd: CDParams) -> dict:
    if C < 0 or delta <= 0:
        raise ValueError("need C >= 0 and delta > 0")
    lhs = t / cd.rho2 * snap.pf * snap.gamma_log + t * t * snap.pf * snap.gamma_z_log
    parts = [
        (1 + 2 * cd.kappa / cd.rho2 + 4 * C / cd.m) / cd.rho2 * snap.entropy,
        -4 * C / (cd.rho2 * cd.m) * t / (1 + delta) * snap.lpf,
        2 * C * C / (cd.m * cd.rho2) * math.log1p(1.0 / delta) * snap.pf,
    ]
    rhs = sum(parts)
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs,
            "scale": max(abs(lhs), *(abs(p) for p in parts), 1e-300)}


def dim_reverse_ls_slack(engine, f, x, t: float, C: float, delta: float, cd: CDParams) -> float:
    return dim_reverse_ls_terms(snapshot(engine, f, x, t), t, C, delta, cd)["slack"]


# the G function --------------------------------------------------------------------------

class GFunction:
    """g(v) = 1/(v + (1 + k) v^{1/3} + k v^{-1/3}) with k = sqrt(D*/2), and its primitive G."""

    def __init__(self, Dstar: float):
        if Dstar <= 0:
            raise ValueError("D* must be positive")
        self.Dstar = float(Dstar)
        self.k = math.sqrt(Dstar / 2.0)
        self._c0 = None

    def g(self, v):
        v = np.asarray(v, dtype=float)
        c = np.cbrt(v)
        return 1.0 / (v + (1.0 + self.k) * c + self.k / c)

    def _integrand_w(self, w):
        # v = w^3: g(v) dv = 3 w^3 / (w^4 + (1 + k) w^2 + k) dw
        return 3.0 * w**3 / (w**4 + (1.0 + self.k) * w * w + self.k)

    def G(self, u: float) -> float:
        if u < 0:
            raise ValueError("G is defined for u >= 0")
        if u == 0:
            return 0.0
        wmax = float(np.cbrt(u))
        pts = [p for p in (1.0, 10.0, 100.0) if p < wmax]
        val, _ = integrate.quad(self._integrand_w, 0.0, wmax, points=pts or None,
                                epsabs=1e-14, epsrel=1e-13, limit=400)
        return float(val)

    def G_inverse(self, y: float) -> float:
        if y <= 0:
            return 0.0
        hi = 1.0
        while self.G(hi) < y:
            hi *= 4.0
        return optimize.brentq(lambda u: self.G(u) - y, 0.0, hi, xtol=1e-15, rtol=1e-15)

    def asymptote(self, us=(1e2, 1e3, 1e4)) -> tuple[float, float]:
        """(C0, envelope): G(u) - ln u -> C0, remainder ~ u^{-2/3} + u^{-4/3}.

        Richardson over a geometric u-grid; the envelope is the change of the
        accelerated value when the smallest u is dropped.
        """
        us = np.asarray(us, dtype=float)
        e = np.array([self.G(u) - math.log(u) for u in us])
        ratio = us[1] / us[0]
        q = ratio ** (-2.0 / 3.0)
        r1 = (e[1:] - q * e[:-1]) / (1 - q)
        if r1.size >= 2:
            c0 = float((r1[-1] - q * q * r1[-2]) / (1 - q * q))
        else:
            c0 = float(r1[-1])
        env = float(abs(c0 - r1[-1]))
        return c0, env

    @property
    def C0(self) -> float:
        if self._c0 is None:
            self._c0 = self.asymptote()[0]
        return self._c0

    @property
    def C0_star(self) -> float:
        return self.C0 - math.log(2.0)

    def remainder(self, u: float) -> float:
        return self.G(u) - math.log(u) - self.C0


def g_eval(Dstar, v):
    return GFunction(Dstar).g(v)


def G_eval(Dstar, u):
    return GFunction(Dstar).G(u)


def G_asymptote(Dstar):
    return GFunction(Dstar).asymptote()


# reverse Harnack inequalities on indicators ---------------------------------------------------

def log_complement(r: float) -> Callable[[float], float]:
    """t -> ln P_t 1_{B(0,r)^c}(0)."""
    return lambda t: h1kernel.log_ball_complement_mass(r, t)


def _u_and_ut(logp: Callable, t: float, h: float | None = None):
    h = h or 1e-3 * t
    u = lambda s: math.sqrt(-logp(s))
    d1 = (u(t + h) - u(t - h)) / (2 * h)
    d2 = (u(t + h / 2) - u(t - h / 2)) / h
    return u(t), (4 * d2 - d1) / 3


def reverse_harnack_ode_check(logp: Callable, t: float, G: GFunction) -> dict:
    """2t u_t + u + (1 + k) u^{1/3} + k u^{-1/3} with u = sqrt(-ln P_t f(x)), and G'(u) u_t + 1/(2t)."""
    lp = logp(t)
    if not lp < 0:
        raise ValueError("P_t f(x) must lie in (0, 1)")
    u, ut = _u_and_ut(logp, t)
    k = G.k
    lhs = 2 * t * ut + u + (1 + k) * u ** (1 / 3) + k * u ** (-1 / 3)
    dG = float(G.g(u)) * ut + 1.0 / (2 * t)
    scale = max(abs(2 * t * ut), u + (1 + k) * u ** (1 / 3) + k * u ** (-1 / 3))
    return {"lhs": float(lhs), "dG_plus": dG, "u": u, "u_t": ut, "scale": scale}


def reverse_harnack_check(logp: Callable, s: float, t: float, G: GFunction) -> float:
    """G(u(t)) - G(u(s)) + ln(t/s)/2 with u = sqrt(-ln P f(x))."""
    if not 0 < s <= t:
        raise ValueError("need 0 < s <= t")
    us, ut = math.sqrt(-logp(s)), math.sqrt(-logp(t))
    return G.G(ut) - G.G(us) + 0.5 * math.log(t / s)


def integrated_ode(logp: Callable, s: float, t: float, G: GFunction, n: int = 17) -> dict:
    """int_s^t G'(u) u_t dtau (Simpson in ln tau) against G(u(t)) - G(u(s))."""
    lt = np.linspace(math.log(s), math.log(t), n)
    vals = []
    for l in lt:
        tau = math.exp(l)
        u, ut = _u_and_ut(logp, tau)
        vals.append(float(G.g(u)) * ut * tau)
    integral = float(simpson_weights(n, lt[-1] - lt[0]) @ np.array(vals))
    direct = G.G(math.sqrt(-logp(t))) - G.G(math.sqrt(-logp(s)))
    return {"integral": integral, "direct": direct, "diff": abs(integral - direct)}


def small_time_rate(r: float, fractions=(0.02, 0.01, 0.005, 0.0025)) -> dict:
    """Extrapolate -s ln P_s 1_{B(0,r)^c}(0) to s -> 0.

    The values behave like L + A s ln s + B s; two Richardson passes cannot
    remove the logarithm, so the limit is taken from the least-squares fit of
    that model over the s-grid.  The plain Richardson value is also reported.
    """
    s = np.asarray(fractions, dtype=float) * r * r
    v = np.array([-si * h1kernel.log_ball_complement_mass(r, si) for si in s])
    A = np.stack([np.ones_like(s), s * np.log(s), s], axis=1)
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    rich = 2 * v[-1] - v[-2]
    return {"s": s, "values": v, "estimate": float(coef[0]), "richardson": float(rich),
            "target": r * r / 4.0}


# key estimate ----------------------------------------------------------------------------------

def key_estimate(r: float, A: float) -> float:
    """P_{A r^2} 1_{B(0,r)}(0)."""
    return h1kernel.ball_mass(r, A * r * r)


def find_A(r: float, lo: float = 1e-4, hi: float = 10.0) -> float:
    """Largest A in [lo, hi] with P_{A r^2} 1_{B(0,r)}(0) >= 1/2 (the value decreases in A)."""
    f = lambda A: key_estimate(r, A) - 0.5
    if f(lo) < 0:
        raise ValueError("no admissible A in the bracket")
    if f(hi) >= 0:
        return hi
    return optimize.brentq(f, lo, hi, xtol=1e-12, rtol=1e-12)


def key_bound_slack(r: float, t: float, G: GFunction) -> float:
    """G(sqrt(-ln P_t 1_{B^c}(0))) - ln(r/sqrt t) - C0*."""
    u = math.sqrt(-h1kernel.log_ball_complement_mass(r, t))
    return G.G(u) - math.log(r / math.sqrt(t)) - G.C0_star


# heat-kernel Harnack and Gaussian bounds -----------------------------------------------------

def harnack_slack(model: ModelSpace, x, y, z, s: float, t: float, cd: CDParams) -> float:
    """ln RHS - ln LHS of p(x,y,s) <= p(x,z,t) (t/s)^{D/2} exp(D d(y,z)^2 / (4 m (t - s)))."""
    if not 0 < s < t:
        raise ValueError("need 0 < s < t")
    D = cd.D
    d = float(cc_distance(model, y, z))
    lhs = h1kernel.log_kernel(x, y, s)
    rhs = h1kernel.log_kernel(x, z, t) + 0.5 * D * math.log(t / s) + D * d * d / (4 * cd.m * (t - s))
    return float(rhs - lhs)


def on_diagonal_ratio(r: float) -> float:
    """p(x, x, 2r^2) / p(x, x, 4r^2)."""
    z = np.zeros(3)
    return float(np.exp(h1kernel.log_kernel(z, z, 2 * r * r) - h1kernel.log_kernel(z, z, 4 * r * r)))


def gaussian_bound_constants(eps: float, cd: CDParams, n_d: int = 30, n_theta: int = 16,
                             d_max: float = 30.0, model: ModelSpace | None = None) -> dict:
    """Smallest C making both Gaussian heat-kernel bounds hold over a normalized grid.

    By left invariance and dilations only g = x^{-1} y / sqrt(t) matters; the
    grid runs over geodesic polar coordinates (d, theta) with d <= d_max.
    Ball volumes are exact: mu(B(x, sqrt t)) = |B(0,1)| t^2.
    """
    if not 0 < eps < 1:
        raise ValueError("need 0 < eps < 1")
    vol1 = h1kernel.unit_ball_volume()
    ds = np.linspace(0.0, d_max, n_d + 1)
    # theta = 2 pi is the vertical axis, where the kernel prefactor peaks
    ths = np.linspace(0.0, 2 * np.pi, n_theta + 1)
    ths[0] = 1e-9
    logs_up, logs_lo = [], []
    for d in ds:
        pts = [np.zeros(3)] if d == 0 else [h1_sphere_point(d, th) for th in ths]
        for g in pts:
            dist = float(h1_norm(g)) if model is None else float(cc_distance(model, np.zeros(3), g))
            lp = h1kernel.log_density_precise(float(g[0] ** 2 + g[1] ** 2), float(g[2]), 1.0)
            logs_up.append(lp + math.log(vol1) + dist * dist / (4 + eps))
            logs_lo.append(-cd.D * dist * dist / (cd.m * (4 - eps)) - lp - math.log(vol1))
    c_up = math.exp(max(logs_up))
    c_lo = math.exp(max(logs_lo))
    return {"C_upper": c_up, "C_lower": c_lo, "C": max(c_up, c_lo), "n_points": len(logs_up)}


def on_diagonal_constants(radii=(0.25, 0.5, 1.0, 2.0)) -> dict:
    """p(x,x,t) mu(B(x, sqrt t)) and p(x,x,2r^2) mu(B(x,r)) over radii."""
    vol1 = h1kernel.unit_ball_volume()
    z = np.zeros(3)
    upper = [float(np.exp(h1kernel.log_kernel(z, z, r * r))) * vol1 * r**4 for r in radii]
    lower = [float(np.exp(h1kernel.log_kernel(z, z, 2 * r * r))) * vol1 * r**4 for r in radii]
    return {"upper": upper, "lower": lower}


def harnack_constant(cd: CDParams) -> float:
    """2^{D/2} e^{D/(4m)}, the constant of the on-diagonal volume bound."""
    return 2 ** (cd.D / 2) * math.exp(cd.D / (4 * cd.m))


def volume_growth_check(radii, cd: CDParams, R0: float = 1.0) -> list[tuple[float, float, float]]:
    """(R, mu(B(0,R)), bound) with bound = C R^D / (R0^D p(0,0,R0^2))."""
    p0 = float(h1kernel.density(np.zeros(3), R0 * R0))
    C = harnack_constant(cd)
    vol1 = h1kernel.unit_ball_volume()
    return [(float(R), vol1 * R**4, C * R**cd.D / (R0**cd.D * p0)) for R in radii]


# Poincare inequality --------------------------------------------------------------------------

@dataclass
class PoincareResult:
    same_ball: list
    double_ball: list
    descriptions: list = field(default_factory=list)

    @property
    def worst_same(self) -> float:
        return max(self.same_ball)

    @property
    def worst_double(self) -> float:
        return max(self.double_ball)


def poincare_check(model: ModelSpace, x, r: float, fs, k: int = 40) -> PoincareResult:
    """Variance / (r^2 Dirichlet energy) over B(x, r), against B(x, r) and B(x, 2r) energies."""
    pts, cell = ball_lattice(model, x, r, k)
    pts2, cell2 = ball_lattice(model, x, 2 * r, k)
    same, double, desc = [], [], []
    for f in fs:
        vals = np.asarray(f(*pts), dtype=float)
        mean = vals.mean()
        var = float(np.sum((vals - mean) ** 2) * cell)
        dir1 = float(np.sum(gamma_sum_of_squares(model, f, f, pts)) * cell)
        dir2 = float(np.sum(gamma_sum_of_squares(model, f, f, pts2)) * cell2)
        if dir1 <= 0:
            raise ValueError("constant test function on the ball")
        same.append(var / (r * r * dir1))
        double.append(var / (r * r * dir2))
        desc.append(getattr(f, "description", repr(f)))
    return PoincareResult(same, double, desc)


def poincare_family() -> list:
    """Ten nonconstant test functions at unit scale."""
    E, S, C = jets.exp, jets.sin, jets.cos
    specs = [
        (lambda x, y, t: x, "x"),
        (lambda x, y, t: y + 0.3 * x, "y + 0.3x"),
        (lambda x, y, t: t, "t"),
        (lambda x, y, t: x * x - y * y, "x^2 - y^2"),
        (lambda x, y, t: x * y + t, "xy + t"),
        (lambda x, y, t: S(2.0 * x) + C(y), "sin 2x + cos y"),
        (lambda x, y, t: E(-(x * x + y * y) - 4.0 * t * t), "gaussian"),
        (lambda x, y, t: x * E(-t), "x exp(-t)"),
        (lambda x, y, t: C(3.0 * t) + 0.5 * x * t, "cos 3t + xt/2"),
        (lambda x, y, t: (x + 0.5) ** 3 - y * t, "(x + 1/2)^3 - yt"),
    ]
    return [jets.ScalarField(fn, d) for fn, d in specs]


def transport_field(f, lam: float):
    """f composed with the dilation by 1/lam."""
    return jets.ScalarField(lambda x, y, t: f(x / lam, y / lam, t / lam**2),
                            f"{getattr(f, 'description', 'f')} at scale {lam:g}")


# parabolic Harnack ------------------------------------------------------------------------------

@dataclass(frozen=True)
class ParabolicBox:
    alpha: float = 1.0
    beta: float = 0.25
    gamma: float = 0.5
    delta: float = 0.75
    eta: float = 0.5
    s: float = 0.0

    def __post_init__(self):
        if not (0 < self.beta < self.gamma < self.delta < self.alpha and 0 < self.eta < 1):
            raise ValueError("need 0 < beta < gamma < delta < alpha and 0 < eta < 1")


def parabolic_harnack_probe(u: Callable, model: ModelSpace, x, r: float, box: ParabolicBox,
                            k: int = 12, n_t: int = 5, eta: float | None = None) -> float:
    """sup of u over Q- divided by inf over Q+; u(points, tau) is caloric."""
    eta = box.eta if eta is None else eta
    pts, _ = ball_lattice(model, x, box.eta * r, k)
    if eta < box.eta:
        keep = cc_distance(model, np.asarray(x, dtype=float).reshape(3, 1), pts) < eta * r
        pts = pts[:, keep]
    t_minus = box.s + r * r * np.linspace(box.beta, box.gamma, n_t)
    t_plus = box.s + r * r * np.linspace(box.delta, box.alpha, n_t)
    sup_minus = max(float(np.max(u(pts, t))) for t in t_minus)
    inf_plus = min(float(np.min(u(pts, t))) for t in t_plus)
    return sup_minus / inf_plus


def kernel_slice(z0, t0: float) -> Callable:
    """u(y, tau) = p(y, z0, t0 + tau)."""
    z0 = np.asarray(z0, dtype=float).reshape(3, 1)
    from .models import h1_inv, h1_mul
    return lambda pts, tau: h1kernel.density(h1_mul(h1_inv(pts), z0), t0 + tau)


def bump_caloric(f: BumpFamily) -> Callable:
    return lambda pts, tau: f.heat(pts, tau).u


def constant_caloric(c: float = 1.0) -> Callable:
    return lambda pts, tau: np.full(pts.shape[1:], c)


def dilated_points(model, lam, pts):
    return dilate(model, lam, pts)
