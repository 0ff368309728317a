"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Experiments run once per session through the same job functions the CLI
uses, with the default configuration (Heisenberg model, seed 42).
"""
from __future__ import annotations

import math

import pytest

from sublab import cli
from sublab import experiments as ex

SEED = 42


@pytest.fixture(scope="session")
def reports():
    ctx = cli.build_context(cli.validate_config({"seed": SEED}))
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = {r.tag: r for r in ex.run_experiment(ctx, name)}
        return cache[name]

    return get


def check(capsys, n: int, title: str, conds: dict, detail: str = ""):
    ok = all(bool(v) for v in conds.values())
    failed = [k for k, v in conds.items() if not v]
    line = f"criterion {n:>2} {title}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    if failed:
        line += f"  failed: {', '.join(failed)}"
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def test_c01_structure_relations(reports, capsys):
    reps = [r for t, r in reports("bracket").items() if t.startswith("structure-relations/")]
    worst = max(r.values["worst"] for r in reps)
    check(capsys, 1, "structure relations", {"three charts": len(reps) == 3, "residual < 1e-10": worst < 1e-10},
          f"worst residual {worst:.2e}")


def test_c02_gamma_consistency(reports, capsys):
    r = reports("cd")["carre-du-champ/heisenberg"]
    w = r.values["worst_residual"]
    check(capsys, 2, "carre du champ consistency", {"100 samples": r.inputs["samples"] >= 100, "residual < 1e-10": w < 1e-10},
          f"worst residual {w:.2e}")


def test_c03_curvature_dimension(reports, capsys):
    reps = {t: r for t, r in reports("cd").items() if t.startswith("curvature-dimension/")}
    conds = {}
    parts = []
    for t, r in sorted(reps.items()):
        v = r.values
        conds[f"{t} grid"] = v["min_slack_grid"] >= -1e-9
        conds[f"{t} optimized"] = v["min_slack_optimized"] >= -1e-9
        conds[f"{t} 200 functions"] = r.inputs["functions"] >= 200
        parts.append(f"{t.split('/')[1]} min {v['min_slack_grid']:.2e}")
    conds["rho1 parameters"] = (reps["curvature-dimension/heisenberg"].inputs["rho1"] == 0.0
                                and {reps[t].inputs["rho1"] for t in reps if "g_rho1" in t} == {1.0, -1.0})
    check(capsys, 3, "curvature-dimension", conds, "; ".join(parts))


def test_c04_vertical_commutation(reports, capsys):
    w = reports("h2")["vertical-commutation/heisenberg"].values["worst_residual"]
    check(capsys, 4, "vertical commutation", {"residual < 1e-9": w < 1e-9}, f"worst residual {w:.2e}")


def test_c05_semigroup_calibration(reports, capsys):
    reps = reports("semigroup")
    cal = reps["semigroup-calibration"].values
    mc = reps["monte-carlo-agreement"]
    z = max(mc.values[k] for k in ("x2", "t_coordinate", "bump"))
    conds = {
        "mass": max(abs(m - 1) for m in cal["mass"]) < 1e-3,
        "second moment": max(abs(m - 1) for m in cal["second_moment_ratio"]) < 1e-3,
        "chapman-kolmogorov": cal["chapman_kolmogorov_rel"] < 1e-3,
        "mc paths 1e5": mc.inputs["paths"] >= 100_000,
        "mc 3 stderr": z < 3.0,
        "mc distribution": mc.values["ks_radial"] < 0.02 and mc.values["ks_vertical"] < 0.02,
    }
    check(capsys, 5, "semigroup calibration", conds,
          f"ck {cal['chapman_kolmogorov_rel']:.1e}, mc max z {z:.2f}")


def test_c06_entropy_identity(reports, capsys):
    r = reports("masterineq")["entropy-identity"]
    e = r.values["worst_rel_err"]
    check(capsys, 6, "entropy identity", {"5 functions": len(r.inputs["functions"]) >= 5,
                                          "T grid": sorted(r.inputs["times"]) == [0.25, 0.5], "rel err < 1e-2": e < 1e-2},
          f"worst rel err {e:.2e}")


def test_c07_reverse_log_sobolev(reports, capsys):
    reps = reports("reverse-ls")
    a = reps["reverse-log-sobolev"].values["min_scaled_slack"]
    d = reps["dimensional-reverse-log-sobolev"].values
    check(capsys, 7, "reverse log-Sobolev", {"plain slack": a >= -1e-2, "dimensional slack": d["min_scaled_slack"] >= -1e-2,
                                             "C = 0 reduction": d["C0_reduction_residual"] < 1e-12},
          f"min scaled slack {a:.3f} / {d['min_scaled_slack']:.3f}, C=0 residual {d['C0_reduction_residual']:.1e}")


def test_c08_reverse_harnack_profile(reports, capsys):
    reps = reports("gfun")
    v = reps["reverse-harnack-profile"].values
    dims = reps["dimension-constants"]
    conds = {
        "large-v limit": abs(v["v_g_at_1e6"] - 1) < 2e-2,
        "small-v limit": abs(v["scaled_g_at_1e-6"] - 1) < 2e-2,
        "C0 stable": v["C0_envelope"] < 1e-3,
        "D and D*": dims.verdict and dims.values["D"] == 8 and dims.values["Dstar"] == 10,
    }
    check(capsys, 8, "reverse Harnack profile", conds, f"C0 {v['C0']:.6f} +- {v['C0_envelope']:.1e}")


def test_c09_reverse_harnack(reports, capsys):
    reps = reports("reverse-harnack")
    dif = reps["reverse-harnack-differential"].values
    v = reps["reverse-harnack"].values
    check(capsys, 9, "reverse Harnack", {"differential": dif["min_scaled_lhs"] >= -1e-2,
                                         "integrated": v["min_slack"] >= -1e-2,
                                         "dilation": v["dilation_residual"] < 1e-2},
          f"min slack {v['min_slack']:.3f}, dilation {v['dilation_residual']:.1e}")


def test_c10_small_time(reports, capsys):
    reps = reports("small-time")
    conds, parts = {}, []
    for r in (0.5, 1.0):
        v = reps[f"small-time-asymptotics/r={r:g}"].values
        conds[f"r={r:g}"] = abs(v["estimate"] - r * r / 4) <= 0.1 * r * r / 4
        parts.append(f"r={r:g}: {v['estimate']:.5f} vs {r * r / 4:g}")
    conds["scaling"] = reps["small-time-scaling"].values["scaling_residual"] < 1e-6
    check(capsys, 10, "small-time asymptotics", conds, "; ".join(parts))


def test_c11_key_estimate(reports, capsys):
    reps = reports("key-estimate")
    v = reps["key-estimate"].values
    low = reps["heat-mass-lower-bound"].values
    conds = {"A* found": len(v["A_star"]) == 3 and all(math.isfinite(a) for a in v["A_star"]),
             "r-independent": v["spread"] < 1e-2, "lower bound": low["min_slack"] >= 0}
    check(capsys, 11, "key estimate", conds, f"A* {v['A_star'][0]:.6f}, spread {v['spread']:.1e}")


def test_c12_volume_doubling(reports, capsys):
    v = reports("doubling")["volume-doubling"].values
    grow = all(val <= bound for _, val, bound in v["growth"])
    conds = {"ratio 16 within 3 stderr": v["max_z"] < 3.0, "Q <= D": v["Q"] <= v["D"],
             "scaling inequality": v["min_scaling_slack"] >= 0, "growth bound": grow}
    check(capsys, 12, "volume doubling", conds, f"max z {v['max_z']:.2f}, Q {v['Q']:.3f}")


def test_c13_heat_kernel_harnack(reports, capsys):
    r = reports("kernel")["heat-kernel-harnack"]
    v = r.values
    conds = {"100 samples": r.inputs["samples"] >= 100, "D = 8": r.inputs["D"] == 8,
             "slack >= 0": v["min_log_slack"] >= 0, "on-diagonal": max(v["on_diagonal_ratios"]) <= v["on_diagonal_bound"]}
    check(capsys, 13, "heat kernel Harnack", conds, f"min log slack {v['min_log_slack']:.3f}")


def test_c14_gaussian_bounds(reports, capsys):
    reps = reports("gaussian")
    fine = {eps: reps[f"gaussian-bounds/eps={eps:g}"].values["fine"] for eps in (0.1, 0.5)}
    drift = {eps: reps[f"gaussian-bounds/eps={eps:g}"].values["drift"] for eps in (0.1, 0.5)}
    conds = {
        "finite": all(math.isfinite(fine[e]["C"]) for e in fine),
        "grid-stable": all(d < 0.1 for d in drift.values()),
        "C(0.1) > C(0.5)": fine[0.1]["C"] > fine[0.5]["C"],
    }
    check(capsys, 14, "Gaussian bounds", conds,
          f"C(0.1) {fine[0.1]['C']:.4f}, C(0.5) {fine[0.5]['C']:.4f}, "
          f"upper-only {fine[0.1]['C_upper']:.4f} > {fine[0.5]['C_upper']:.4f}")


def test_c15_poincare(reports, capsys):
    r = reports("poincare")["poincare"]
    v = r.values
    conds = {"10 functions": len(r.inputs["functions"]) == 10, "finite": all(map(math.isfinite, v["same_ball"])),
             "r-independent": v["radius_deviation"] < 0.05, "same ball >= doubled ball": v["dominated"]}
    check(capsys, 15, "Poincare", conds, f"C {v['same_ball'][0]:.4f}, deviation {v['radius_deviation']:.1e}")


def test_c16_parabolic_harnack(reports, capsys):
    v = reports("parharnack")["parabolic-harnack"].values
    ratios = v["ratios"]
    conds = {"3 families": len(ratios) == 3,
             "finite": all(math.isfinite(x) and x > 0 for xs in ratios.values() for x in xs),
             "constant ratio 1": v["constant_ratio"] == 1.0}
    check(capsys, 16, "parabolic Harnack probe", conds,
          ", ".join(f"{k} {xs[0]:.3g}" for k, xs in sorted(ratios.items())))


def test_c17_determinism(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('seed = 42\nexperiments = ["bracket", "gfun", "doubling"]\n'
                   "[params.doubling]\nn = 20000\n", encoding="utf-8")
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        code = cli.main(["run", "--config", str(cfg), "--out", str(d)])
        outs.append((code, {p.name: p.read_bytes() for p in sorted(d.iterdir())}))
    capsys.readouterr()
    same = outs[0][1] == outs[1][1]
    check(capsys, 17, "determinism", {"byte-identical": same, "files written": len(outs[0][1]) >= 5,
                                      "same status": outs[0][0] == outs[1][0]},
          f"{len(outs[0][1])} files compared")
