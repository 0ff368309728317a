"""Experiment jobs.  Each job is a pure function of (context, parameters).

A job returns a list of :class:`InequalityReport`.  Randomness comes only
from the context's seed, combined with the job's fixed index, so reports do
not depend on which other experiments run or in which order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import h1kernel, ineqlab, jets
from .gamma import (NU_GRID, cd_slack_from, cd_slack_optimized_from, gamma_bilinear,
                    gamma_sum_of_squares, gamma_values, normalization)
from .heatflow import BumpFamily, GaussianBump, random_bump_family
from .metric import doubling_report
from .models import ModelSpace, bracket_check, dilate, make_model
from .report import InequalityReport
from .semigroup import (GridSpec, MonteCarloEngine, QuadratureEngine, box_probability,
                        chapman_kolmogorov, dilation_check, mc_paths, semigroup_grad, symmetric_pair)

EXPERIMENTS = (
    "bracket", "cd", "h2", "kernel", "semigroup", "masterineq", "reverse-ls", "gfun",
    "reverse-harnack", "small-time", "key-estimate", "doubling", "gaussian", "poincare",
    "parharnack",
)


class ConfigError(ValueError):
    """Invalid configuration (bad key, bad value, unknown experiment)."""


@dataclass
class EngineConfig:
    variant: str = "kernel_quadrature"
    box_halfwidths: tuple = (7.5, 10.0)
    grid_n: int = 64
    mc_paths: int = 100_000
    mc_dt: float = 1 / 200
    seed: int | None = None


@dataclass
class Context:
    model: ModelSpace
    engine: EngineConfig
    seed: int
    echo: dict = field(default_factory=dict)
    _engines: dict = field(default_factory=dict, repr=False)

    def rng(self, name: str, stream: int = 0) -> np.random.Generator:
        idx = EXPERIMENTS.index(name)
        return np.random.default_rng(np.random.SeedSequence([self.seed, idx, stream]))

    def quadrature(self, n: int | None = None) -> QuadratureEngine:
        n = int(n or self.engine.grid_n)
        if n not in self._engines:
            hh, hv = self.engine.box_halfwidths
            self._engines[n] = QuadratureEngine(GridSpec(halfwidth_h=float(hh), halfwidth_v=float(hv), n=n))
        return self._engines[n]

    def monte_carlo(self, n_paths: int | None = None) -> MonteCarloEngine:
        seed = self.engine.seed if self.engine.seed is not None else self.seed
        return MonteCarloEngine(self.model, int(n_paths or self.engine.mc_paths), float(self.engine.mc_dt), int(seed))

    def heisenberg(self) -> ModelSpace:
        if self.model.kind != "heisenberg":
            raise ConfigError("this experiment runs on the Heisenberg model only")
        return self.model


def _report(ctx: Context, experiment: str, tag: str, inputs: dict, values: dict, tol: float,
            verdict: bool, engine: dict | None = None, note: str = "") -> InequalityReport:
    return InequalityReport(experiment=experiment, tag=tag, inputs=inputs, values=values,
                            tolerance=float(tol), verdict=bool(verdict), engine=engine or {},
                            config=ctx.echo, note=note)


def _builtin_models():
    return [make_model("heisenberg"), make_model("g_rho1", 1.0), make_model("g_rho1", -1.0)]


def _bump_families(rng, n, eps=1e-3):
    return [random_bump_family(rng, eps=eps) for _ in range(n)]


def _family_inputs(f: BumpFamily) -> dict:
    return {"eps": f.eps, "amps": list(f.amps),
            "bumps": [[list(b.center), b.a, b.b] for b in f.bumps]}


# algebraic layer ---------------------------------------------------------------------

def exp_bracket(ctx: Context, n_points: int = 100, tol: float = 1e-10):
    rng = ctx.rng("bracket")
    out = []
    for m in _builtin_models():
        res = bracket_check(m, m.sample_points(rng, n_points))
        worst = max(res.values())
        out.append(_report(ctx, "bracket", f"structure-relations/{m.name}",
                           {"model": m.name, "points": n_points}, dict(res, worst=worst), tol, worst < tol))
    return out


def _gamma_consistency(ctx, rng, model, n, tol):
    worst = 0.0
    for _ in range(n):
        f = jets.random_test_function(rng)
        g = jets.random_test_function(rng)
        p = model.sample_points(rng, 1)
        a = gamma_bilinear(model, f, g, p)
        b = gamma_sum_of_squares(model, f, g, p)
        worst = max(worst, float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b))))))
    return _report(ctx, "cd", f"carre-du-champ/{model.name}", {"model": model.name, "samples": n},
                   {"worst_residual": worst}, tol, worst < tol)


def exp_cd(ctx: Context, n_functions: int = 200, tol: float = 1e-9, gamma_samples: int = 100,
           gamma_tol: float = 1e-10):
    rng = ctx.rng("cd")
    out = []
    for m in _builtin_models():
        worst_grid, worst_opt, n_neg, n_opt = np.inf, np.inf, 0, 0
        for _ in range(n_functions):
            f = jets.random_test_function(rng)
            p = m.sample_points(rng, 1)
            gv = gamma_values(m, f, p)
            gv = gv.scaled(normalization(gv))
            s_grid = cd_slack_from(gv, m.cd, NU_GRID[:, None])
            s_opt, neg = cd_slack_optimized_from(gv, m.cd)
            worst_grid = min(worst_grid, float(np.min(s_grid)))
            n_neg += int(np.sum(neg))
            if not np.all(neg):
                n_opt += 1
                worst_opt = min(worst_opt, float(np.nanmin(s_opt)))
        ok = worst_grid >= -tol and (n_opt == 0 or worst_opt >= -tol)
        cd = m.cd
        out.append(_report(ctx, "cd", f"curvature-dimension/{m.name}",
                           {"model": m.name, "functions": n_functions, "rho1": cd.rho1, "rho2": cd.rho2,
                            "kappa": cd.kappa, "m": cd.m, "nu_grid": [NU_GRID[0], NU_GRID[-1], len(NU_GRID)]},
                           {"min_slack_grid": worst_grid, "min_slack_optimized": worst_opt,
                            "negative_radicands": n_neg}, tol, ok))
        out.append(_gamma_consistency(ctx, rng, m, gamma_samples, gamma_tol))
    return out


def exp_h2(ctx: Context, n_functions: int = 100, tol: float = 1e-9):
    rng = ctx.rng("h2")
    out = []
    for m in _builtin_models():
        worst = 0.0
        for _ in range(n_functions):
            f = jets.random_test_function(rng)
            p = m.sample_points(rng, 1)
            gv = gamma_values(m, f, p)
            worst = max(worst, float(np.max(gv.scaled(normalization(gv)).h2_residual)))
        out.append(_report(ctx, "h2", f"vertical-commutation/{m.name}", {"model": m.name, "functions": n_functions},
                           {"worst_residual": worst}, tol, worst < tol))
    return out


# heat kernel and semigroup ---------------------------------------------------------------

def exp_kernel(ctx: Context, n_harnack: int = 100, radii=(0.25, 0.5, 1.0, 2.0)):
    m = ctx.heisenberg()
    rng = ctx.rng("kernel")
    out = []
    p001 = float(h1kernel.kernel(np.zeros(3), np.zeros(3), 1.0))
    sym, dil = 0.0, 0.0
    for _ in range(20):
        x, y = rng.normal(size=(2, 3))
        t = float(rng.uniform(0.2, 2.0))
        a, b = symmetric_pair(x, y, t)
        sym = max(sym, abs(a - b) / max(a, b))
        dil = max(dil, dilation_check(2.0, y, t, m))
    out.append(_report(ctx, "kernel", "heat-kernel", {"samples": 20},
                       {"p_origin_t1": p001, "p_origin_exact": 1 / 16, "symmetry": sym, "dilation": dil},
                       1e-6, abs(p001 - 1 / 16) < 1e-8 and sym < 1e-8 and dil < 1e-6))
    cd = m.cd
    worst = np.inf
    for _ in range(n_harnack):
        x, y, z = rng.normal(scale=0.7, size=(3, 3))
        t = float(rng.uniform(0.1, 2.0))
        s = t * float(rng.uniform(0.1, 0.9))
        worst = min(worst, ineqlab.harnack_slack(m, x, y, z, s, t, cd))
    ratios = [ineqlab.on_diagonal_ratio(r) for r in radii]
    bound = 2 ** (cd.D / 2)
    out.append(_report(ctx, "kernel", "heat-kernel-harnack",
                       {"samples": n_harnack, "D": cd.D, "radii": list(radii)},
                       {"min_log_slack": worst, "on_diagonal_ratios": ratios, "on_diagonal_bound": bound},
                       0.0, worst >= 0 and max(ratios) <= bound))
    return out


def exp_semigroup(ctx: Context, times=(0.1, 0.5, 1.0), ck_times=(0.25, 0.5), mc_t: float = 0.5,
                  n_paths: int | None = None, ks_levels: int = 9):
    ctx.heisenberg()
    eng = ctx.quadrature()
    rng = ctx.rng("semigroup")
    meta = eng.metadata
    out = []
    mass = [eng.apply(lambda a, b, c: 1.0 + 0 * a, np.zeros(3), t) for t in times]
    mom = [eng.apply(lambda a, b, c: a * a, np.zeros(3), t) / (2 * t) for t in times]
    ck = [chapman_kolmogorov(eng, np.zeros(3), t) for t in ck_times]
    ck_err = max(abs(a - b) / a for a, b in ck)
    out.append(_report(ctx, "semigroup", "semigroup-calibration", {"times": list(times), "ck_times": list(ck_times)},
                       {"mass": mass, "second_moment_ratio": mom, "chapman_kolmogorov_rel": ck_err},
                       1e-3, max(abs(v - 1) for v in mass) < 1e-3 and max(abs(v - 1) for v in mom) < 1e-3
                       and ck_err < 1e-3, meta))

    # semigroup property and the heat equation on a bump family
    f = random_bump_family(rng)
    inner = lambda a, b, c: f.heat(np.stack(np.broadcast_arrays(a, b, c)), 0.25).u
    nested = eng.apply(inner, np.zeros(3), 0.25)
    exact = float(f.heat(np.zeros((3, 1)), 0.5).u[0])
    x0 = np.array([0.2, -0.1, 0.05])
    d = semigroup_grad(eng, f, x0, 0.5)
    heq = abs(d.lu - d.dt) / max(abs(d.dt), 1e-12)
    out.append(_report(ctx, "semigroup", "semigroup-property", {"f": _family_inputs(f), "s": 0.25, "t": 0.25},
                       {"nested": nested, "exact": exact, "heat_equation_rel": heq},
                       1e-3, abs(nested - exact) < 2e-3 * exact and heq < 1e-3, meta))

    # Monte Carlo cross-validation
    mc = ctx.monte_carlo(n_paths)
    q = mc_paths(mc.model, np.zeros(3), mc_t, mc.n_paths, mc.dt_fraction * mc_t, mc.seed)
    n = q.shape[1]
    se = lambda v: float(v.std(ddof=1) / math.sqrt(n))
    x2 = q[0] ** 2
    fq = f(q[0], q[1], q[2])
    quad_f = eng.apply(f, np.zeros(3), mc_t)
    r2 = q[0] ** 2 + q[1] ** 2
    rs = np.linspace(0.05, 4.0, 80) * math.sqrt(mc_t)
    ks_r = float(np.max(np.abs(np.array([(r2 <= r * r).mean() for r in rs]) - (1 - np.exp(-rs**2 / (4 * mc_t))))))
    cs = np.linspace(-3.0, 3.0, ks_levels) * mc_t
    L = 12.0 * math.sqrt(mc_t)
    pred = np.array([box_probability(eng, [-L, -L, -24 * mc_t], [L, L, c], mc_t, n=32) for c in cs])
    ks_z = float(np.max(np.abs(np.array([(q[2] <= c).mean() for c in cs]) - pred)))
    z_scores = {"x2": abs(x2.mean() - 2 * mc_t) / se(x2), "t_coordinate": abs(q[2].mean()) / se(q[2]),
                "bump": abs(fq.mean() - quad_f) / se(fq)}
    out.append(_report(ctx, "semigroup", "monte-carlo-agreement", {"t": mc_t, "paths": n},
                       dict(z_scores, ks_radial=ks_r, ks_vertical=ks_z), 3.0,
                       max(z_scores.values()) < 3.0 and ks_r < 0.02 and ks_z < 0.02, mc.metadata))
    return out


# entropy layer ---------------------------------------------------------------------------------

def exp_masterineq(ctx: Context, n_functions: int = 5, times=(0.25, 0.5), grid_n: int = 48,
                   tau: float = 0.1, C_values=(0.0, 1.0), nodes: int = 9, tol: float = 1e-2):
    ctx.heisenberg()
    eng = ctx.quadrature(grid_n)
    rng = ctx.rng("masterineq")
    cd = ctx.model.cd
    out = []
    fams = _bump_families(rng, n_functions)
    worst_id, worst_const, worst_disp, min_phi = 0.0, np.inf, 0.0, np.inf
    worst_rls = np.inf
    for f in fams:
        x = rng.normal(scale=0.2, size=3)
        for T in times:
            ident = ineqlab.entropy_identity(eng, f, x, T, nodes)
            snap = ident["snapshot"]
            prof = (ident["times"], ident["phi1"], ident["phi2"])
            worst_id = max(worst_id, ident["rel_err"])
            min_phi = min(min_phi, float(np.min(ident["phi1"])), float(np.min(ident["phi2"])))
            mt = ineqlab.master_terms(eng, f, x, T, ineqlab.MasterCoefficients.constant(), cd,
                                      profile=prof, snap=snap)
            worst_const = min(worst_const, mt["slack"] / mt["scale"])
            for C in C_values:
                coef = ineqlab.MasterCoefficients.reverse_log_sobolev(T, tau, C, cd)
                mt = ineqlab.master_terms(eng, f, x, T, coef, cd, profile=prof, snap=snap)
                disp = ineqlab.reverse_ls_display(snap, T, tau, C, cd)
                worst_disp = max(worst_disp, abs(mt["slack"] - disp["slack"]) / max(mt["scale"], disp["scale"]))
                worst_rls = min(worst_rls, mt["slack"] / mt["scale"])
    inputs = {"functions": [_family_inputs(f) for f in fams], "times": list(times), "nodes": nodes}
    out.append(_report(ctx, "masterineq", "entropy-identity", inputs,
                       {"worst_rel_err": worst_id, "min_phi": min_phi}, tol,
                       worst_id < tol and min_phi >= 0, eng.metadata))
    out.append(_report(ctx, "masterineq", "entropy-master-inequality", dict(inputs, tau=tau, C=list(C_values)),
                       {"min_scaled_slack_constant": worst_const, "min_scaled_slack_reverse_ls": worst_rls,
                        "display_mismatch": worst_disp}, tol,
                       worst_const >= -tol and worst_rls >= -tol and worst_disp < tol, eng.metadata))
    ids = [ineqlab.coefficient_identities(T, tau, C, cd) for T in times for C in (0.0, 0.5, 1.0, 2.0)]
    worst_sym = max(max(d.values()) for d in ids)
    out.append(_report(ctx, "masterineq", "coefficient-identities", {"times": list(times), "tau": tau},
                       {"worst_residual": worst_sym}, 1e-9, worst_sym < 1e-9))
    return out


def exp_reverse_ls(ctx: Context, n_functions: int = 20, n_dim: int = 10, times=(0.1, 0.25, 0.5, 1.0),
                   C_grid=(0.0, 0.5, 1.0, 2.0, 5.0), delta_grid=(0.1, 0.5, 1.0, 2.0), tol: float = 1e-2):
    ctx.heisenberg()
    eng = ctx.quadrature()
    rng = ctx.rng("reverse-ls")
    cd = ctx.model.cd
    out = []
    fams = _bump_families(rng, n_functions)
    worst, worst_dim, worst_c0 = np.inf, np.inf, 0.0
    for i, f in enumerate(fams):
        x = rng.normal(scale=0.2, size=3)
        for t in times:
            snap = ineqlab.snapshot(eng, f, x, t)
            r = ineqlab.reverse_ls_terms(snap, t, cd)
            worst = min(worst, r["slack"] / r["scale"])
            if i < n_dim:
                for C in C_grid:
                    for dlt in delta_grid:
                        d = ineqlab.dim_reverse_ls_terms(snap, t, C, dlt, cd)
                        worst_dim = min(worst_dim, d["slack"] / d["scale"])
                        if C == 0.0:
                            worst_c0 = max(worst_c0, abs(d["slack"] - r["slack"] / cd.rho2) / d["scale"])
    inputs = {"functions": n_functions, "times": list(times)}
    out.append(_report(ctx, "reverse-ls", "reverse-log-sobolev", inputs, {"min_scaled_slack": worst}, tol,
                       worst >= -tol, eng.metadata))
    out.append(_report(ctx, "reverse-ls", "dimensional-reverse-log-sobolev",
                       dict(inputs, functions=n_dim, C=list(C_grid), delta=list(delta_grid)),
                       {"min_scaled_slack": worst_dim, "C0_reduction_residual": worst_c0}, tol,
                       worst_dim >= -tol and worst_c0 < 1e-12, eng.metadata))
    # epsilon-limit probe
    bump = GaussianBump((0.2, -0.1, 0.1), 1.5, 1.0)
    slacks = []
    for eps in (1e-2, 1e-3, 1e-4):
        f = BumpFamily(eps, (1 - eps,), (bump,), f"eps={eps:g}")
        slacks.append(reverse_ls_slack_scaled(eng, f, 0.5, cd))
    drift = abs(slacks[-1] - slacks[-2]) / max(abs(slacks[-1]), 1e-300)
    out.append(_report(ctx, "reverse-ls", "reverse-log-sobolev-eps-limit", {"eps": [1e-2, 1e-3, 1e-4], "t": 0.5},
                       {"scaled_slacks": slacks, "last_drift": drift}, 0.1,
                       min(slacks) >= -tol and drift < 0.1, eng.metadata))
    return out


def reverse_ls_slack_scaled(eng, f, t, cd):
    r = ineqlab.reverse_ls_terms(ineqlab.snapshot(eng, f, np.zeros(3), t), t, cd)
    return r["slack"] / r["scale"]


# reverse Harnack layer ------------------------------------------------------------------------

def exp_gfun(ctx: Context, tol: float = 2e-2):
    cd = ctx.model.cd
    G = ineqlab.GFunction(cd.Dstar)
    big = 1e6 * float(G.g(1e6))
    small = G.k * 1e-6 ** (-1 / 3) * float(G.g(1e-6))
    c0, env = G.asymptote()
    ys = np.linspace(0.1, 10.0, 12)
    inv = max(abs(G.G(G.G_inverse(y)) - y) for y in ys)
    out = [
        _report(ctx, "gfun", "reverse-harnack-profile",
                {"Dstar": cd.Dstar, "u_grid": [1e2, 1e3, 1e4]},
                {"v_g_at_1e6": big, "scaled_g_at_1e-6": small, "C0": c0, "C0_envelope": env,
                 "C0_star": c0 - math.log(2), "inverse_residual": inv},
                tol, abs(big - 1) < tol and abs(small - 1) < tol and env < 1e-3 and inv < 1e-8),
        _report(ctx, "gfun", "dimension-constants", {"rho2": cd.rho2, "kappa": cd.kappa, "m": cd.m},
                {"D": cd.D, "Dstar": cd.Dstar}, 0.0,
                cd.D == (1 + 3 * cd.kappa / (2 * cd.rho2)) * cd.m and cd.Dstar == cd.m * (1 + 2 * cd.kappa / cd.rho2)),
    ]
    return out


def exp_reverse_harnack(ctx: Context, r: float = 1.0, times=(0.05, 0.1, 0.2, 0.4),
                        pairs=((0.02, 0.05), (0.05, 0.1), (0.1, 0.25), (0.25, 0.5), (0.5, 1.0), (0.02, 1.0)),
                        lam: float = 2.0, large_t: float = 25.0, tol: float = 1e-2):
    ctx.heisenberg()
    G = ineqlab.GFunction(ctx.model.cd.Dstar)
    lp = ineqlab.log_complement(r)
    lpl = ineqlab.log_complement(lam * r)
    ode = [ineqlab.reverse_harnack_ode_check(lp, t * r * r, G) for t in times]
    ode_min = min(o["lhs"] / o["scale"] for o in ode)
    dg_min = min(o["dG_plus"] for o in ode)
    near_one = ineqlab.reverse_harnack_ode_check(lp, large_t * r * r, G)
    slacks, transported, integ = [], [], []
    for s, t in pairs:
        s, t = s * r * r, t * r * r
        slacks.append(ineqlab.reverse_harnack_check(lp, s, t, G))
        transported.append(ineqlab.reverse_harnack_check(lpl, lam**2 * s, lam**2 * t, G))
        integ.append(ineqlab.integrated_ode(lp, s, t, G)["diff"])
    inv = max(abs(a - b) for a, b in zip(slacks, transported))
    zero = ineqlab.reverse_harnack_check(lp, 0.3, 0.3, G)
    out = [
        _report(ctx, "reverse-harnack", "reverse-harnack-differential", {"r": r, "times": list(times)},
                {"min_scaled_lhs": ode_min, "min_dG_plus": dg_min, "lhs_near_one": near_one["lhs"],
                 "u_near_one": near_one["u"]}, tol, ode_min >= -tol and dg_min >= -tol and near_one["lhs"] > 0),
        _report(ctx, "reverse-harnack", "reverse-harnack", {"r": r, "pairs": [list(p) for p in pairs], "lambda": lam},
                {"slacks": slacks, "min_slack": min(slacks), "dilation_residual": inv,
                 "integration_residual": max(integ), "degenerate_interval": zero},
                tol, min(slacks) >= -tol and inv < tol and max(integ) < tol and abs(zero) < 1e-12),
    ]
    return out


def exp_small_time(ctx: Context, radii=(0.5, 1.0), fractions=(0.02, 0.01, 0.005, 0.0025),
                   growth_radii=(1.0, 1.5, 2.0, 2.5, 3.0), growth_s: float = 0.01, tol: float = 0.1):
    ctx.heisenberg()
    out = []
    ests = {}
    for r in radii:
        res = ineqlab.small_time_rate(r, fractions)
        ests[r] = res["estimate"]
        target = res["target"]
        ok = res["estimate"] >= 0.95 * target and abs(res["estimate"] - target) <= tol * target
        out.append(_report(ctx, "small-time", f"small-time-asymptotics/r={r:g}", {"r": r, "s": res["s"]},
                           {"values": res["values"], "estimate": res["estimate"], "richardson": res["richardson"],
                            "target": target}, tol, ok))
    rs = sorted(radii)
    lam = rs[-1] / rs[0]
    scal = abs(ests[rs[-1]] - lam**2 * ests[rs[0]]) / ests[rs[-1]]
    vals = np.array([-growth_s * h1kernel.log_ball_complement_mass(r, growth_s) for r in growth_radii])
    x = np.asarray(growth_radii) ** 2
    r2 = float(np.corrcoef(x, vals)[0, 1] ** 2)
    slope = float(np.polyfit(x, vals, 1)[0])
    out.append(_report(ctx, "small-time", "small-time-scaling", {"radii": list(radii), "growth_radii": list(growth_radii),
                                                                 "s": growth_s},
                       {"scaling_residual": scal, "growth_r_squared": r2, "growth_slope": slope},
                       1e-6, scal < 1e-6 and r2 > 0.99))
    return out


def exp_key_estimate(ctx: Context, radii=(0.5, 1.0, 2.0), A_grid=(0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0),
                     t_fractions=(0.01, 0.05, 0.2, 1.0, 4.0), tol: float = 1e-2):
    ctx.heisenberg()
    G = ineqlab.GFunction(ctx.model.cd.Dstar)
    A = {r: ineqlab.find_A(r) for r in radii}
    err = max(abs(ineqlab.key_estimate(r, a) - 0.5) for r, a in A.items())
    spread = max(A.values()) - min(A.values())
    mono = all(np.all(np.diff([ineqlab.key_estimate(r, a) for a in A_grid]) < 0) for r in radii)
    slacks = [ineqlab.key_bound_slack(r, f * r * r, G) for r in radii for f in t_fractions]
    return [
        _report(ctx, "key-estimate", "key-estimate", {"radii": list(radii), "A_grid": list(A_grid)},
                {"A_star": [A[r] for r in radii], "value_error": err, "spread": spread, "monotone": mono},
                tol, err < 1e-3 and spread < tol and mono),
        _report(ctx, "key-estimate", "heat-mass-lower-bound", {"radii": list(radii), "t_over_r2": list(t_fractions)},
                {"slacks": slacks, "min_slack": min(slacks), "C0_star": G.C0_star}, 0.0, min(slacks) >= 0),
    ]


# geometry layer ---------------------------------------------------------------------------------

def exp_doubling(ctx: Context, centers=((0.0, 0.0, 0.0), (0.3, -0.2, 0.1)), radii=(0.5, 1.0, 2.0),
                 n: int = 100_000, t_grid=(0.125, 0.25, 0.5, 0.75, 1.0), growth_radii=(1.0, 2.0, 4.0, 8.0)):
    m = ctx.heisenberg()
    rep = doubling_report(m, [np.asarray(c, dtype=float) for c in centers], radii, n=n, seed=ctx.seed,
                          t_grid=t_grid)
    z = max(abs(row.ratio - 16.0) / row.stderr for row in rep["rows"])
    scal = min(a - b for (_, _, _, a, b) in rep["scaling"])
    D = m.cd.D
    growth = ineqlab.volume_growth_check(growth_radii, m.cd)
    grow_ok = all(v <= b for _, v, b in growth)
    rows = [[list(r.center), r.r, r.vol_r, r.vol_2r, r.ratio, r.stderr] for r in rep["rows"]]
    return [_report(ctx, "doubling", "volume-doubling", {"centers": [list(c) for c in centers], "radii": list(radii),
                                                         "samples": n, "t_grid": list(t_grid)},
                    {"rows": rows, "max_z": z, "C1": rep["C1"], "Q": rep["Q"], "D": D, "min_scaling_slack": scal,
                     "growth": [list(g) for g in growth]},
                    3.0, z < 3.0 and rep["Q"] <= D and scal >= 0 and grow_ok)]


def exp_gaussian(ctx: Context, eps_values=(0.1, 0.5), coarse=(30, 16), fine=(60, 32), d_max: float = 30.0,
                 drift_tol: float = 0.1, radii=(0.25, 0.5, 1.0, 2.0)):
    m = ctx.heisenberg()
    out = []
    fitted = {}
    for eps in eps_values:
        a = ineqlab.gaussian_bound_constants(eps, m.cd, *coarse, d_max=d_max)
        b = ineqlab.gaussian_bound_constants(eps, m.cd, *fine, d_max=d_max)
        drift = max(abs(b[k] - a[k]) / b[k] for k in ("C_upper", "C_lower", "C"))
        fitted[eps] = b
        out.append(_report(ctx, "gaussian", f"gaussian-bounds/eps={eps:g}", {"eps": eps, "coarse": list(coarse),
                                                                             "fine": list(fine), "d_max": d_max},
                           {"coarse": a, "fine": b, "drift": drift}, drift_tol,
                           all(math.isfinite(b[k]) for k in ("C_upper", "C_lower")) and drift < drift_tol))
    diag = ineqlab.on_diagonal_constants(radii)
    spread = (max(diag["lower"]) - min(diag["lower"])) / min(diag["lower"])
    out.append(_report(ctx, "gaussian", "on-diagonal-bounds", {"radii": list(radii)},
                       dict(diag, lower_spread=spread), 1e-6, min(diag["lower"]) > 0 and spread < 1e-6))
    return out


def exp_poincare(ctx: Context, radii=(0.5, 1.0, 2.0), k: int = 40, tol: float = 0.05):
    m = ctx.heisenberg()
    fam = ineqlab.poincare_family()
    res = {r: ineqlab.poincare_check(m, np.zeros(3), r, [ineqlab.transport_field(f, r) for f in fam], k)
           for r in radii}
    same = [res[r].worst_same for r in radii]
    double = [res[r].worst_double for r in radii]
    dev = (max(same) - min(same)) / min(same)
    dominated = all(a >= b for r in radii for a, b in zip(res[r].same_ball, res[r].double_ball))
    return [_report(ctx, "poincare", "poincare", {"radii": list(radii), "lattice": k,
                                                  "functions": res[radii[0]].descriptions},
                    {"same_ball": same, "double_ball": double, "radius_deviation": dev, "dominated": dominated},
                    tol, all(map(math.isfinite, same)) and dev < tol and dominated)]


def exp_parharnack(ctx: Context, r: float = 1.0, lam: float = 0.5, k: int = 12, etas=(0.5, 0.25), tol: float = 1e-6):
    m = ctx.heisenberg()
    box = ineqlab.ParabolicBox()
    rng = ctx.rng("parharnack")
    f = random_bump_family(rng)
    z0 = np.array([0.2, 0.1, 0.05])

    def families(scale):
        zs = dilate(m, scale, z0)
        return {"kernel-slice": ineqlab.kernel_slice(zs, 0.3 * scale**2),
                "bump": ineqlab.bump_caloric(f.scaled(scale)),
                "constant": ineqlab.constant_caloric()}

    ratios = {name: [ineqlab.parabolic_harnack_probe(u, m, np.zeros(3), r, box, k=k, eta=e) for e in etas]
              for name, u in families(1.0).items()}
    transported = {name: ineqlab.parabolic_harnack_probe(u, m, np.zeros(3), lam * r, box, k=k)
                   for name, u in families(lam).items()}
    dil = max(abs(transported[n] - ratios[n][0]) / ratios[n][0] for n in ratios)
    finite = all(math.isfinite(v) and v > 0 for vs in ratios.values() for v in vs)
    return [_report(ctx, "parharnack", "parabolic-harnack",
                    {"r": r, "etas": list(etas), "box": [box.alpha, box.beta, box.gamma, box.delta], "lattice": k},
                    {"ratios": ratios, "dilation_residual": dil, "constant_ratio": ratios["constant"][0]},
                    tol, finite and ratios["constant"][0] == 1.0 and dil < tol)]


JOBS = {
    "bracket": exp_bracket, "cd": exp_cd, "h2": exp_h2, "kernel": exp_kernel, "semigroup": exp_semigroup,
    "masterineq": exp_masterineq, "reverse-ls": exp_reverse_ls, "gfun": exp_gfun,
    "reverse-harnack": exp_reverse_harnack, "small-time": exp_small_time, "key-estimate": exp_key_estimate,
    "doubling": exp_doubling, "gaussian": exp_gaussian, "poincare": exp_poincare, "parharnack": exp_parharnack,
}


def run_experiment(ctx: Context, name: str, params: dict | None = None) -> list[InequalityReport]:
    if name not in JOBS:
        raise ConfigError(f"unknown experiment {name!r}")
    return JOBS[name](ctx, **(params or {}))
