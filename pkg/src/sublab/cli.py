"""Command line entry point: ``sublab run | list | digest``."""
from __future__ import annotations

import argparse
import inspect
import json
import logging
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import experiments as ex
from .models import ModelError, make_model
from .report import digest, digest_text, write_csv, write_jsonl, write_table

log = logging.getLogger("sublab")

TAGS = {
    "bracket": "structure-relations", "cd": "curvature-dimension", "h2": "vertical-commutation",
    "kernel": "heat-kernel", "semigroup": "semigroup-calibration", "masterineq": "entropy-master-inequality",
    "reverse-ls": "reverse-log-sobolev", "gfun": "reverse-harnack-profile", "reverse-harnack": "reverse-harnack",
    "small-time": "small-time-asymptotics", "key-estimate": "key-estimate", "doubling": "volume-doubling",
    "gaussian": "gaussian-bounds", "poincare": "poincare", "parharnack": "parabolic-harnack",
}

_TOP_KEYS = {"seed", "experiments", "model", "engine", "params", "out"}
_MODEL_KEYS = {"kind", "rho1"}
_ENGINE_KEYS = {"variant", "box_halfwidths", "grid_n", "mc_paths", "mc_dt", "seed"}
OUT_ENV = "SUBLAB_OUT"


def _reject(keys, allowed, where):
    bad = sorted(set(keys) - allowed)
    if bad:
        raise ex.ConfigError(f"unknown key(s) in {where}: {', '.join(bad)}")


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as err:
        raise ex.ConfigError(f"cannot read config: {err}") from err
    return validate_config(cfg)


def validate_config(cfg: dict) -> dict:
    """Check the schema; returns a normalized copy with defaults filled in."""
    _reject(cfg, _TOP_KEYS, "config")
    out = {"seed": int(cfg.get("seed", 42)), "out": cfg.get("out")}
    exps = cfg.get("experiments", list(ex.EXPERIMENTS))
    if not isinstance(exps, list) or not all(isinstance(e, str) for e in exps):
        raise ex.ConfigError("experiments must be a list of names")
    for e in exps:
        if e not in ex.EXPERIMENTS:
            raise ex.ConfigError(f"unknown experiment {e!r}")
    out["experiments"] = [e for e in ex.EXPERIMENTS if e in exps]
    model = dict(cfg.get("model", {}))
    _reject(model, _MODEL_KEYS, "model")
    out["model"] = {"kind": model.get("kind", "heisenberg"), "rho1": float(model.get("rho1", 0.0))}
    engine = dict(cfg.get("engine", {}))
    _reject(engine, _ENGINE_KEYS, "engine")
    if engine.get("variant", "kernel_quadrature") not in ("kernel_quadrature", "monte_carlo"):
        raise ex.ConfigError("engine.variant must be kernel_quadrature or monte_carlo")
    defaults = ex.EngineConfig()
    out["engine"] = {
        "variant": engine.get("variant", defaults.variant),
        "box_halfwidths": [float(v) for v in engine.get("box_halfwidths", defaults.box_halfwidths)],
        "grid_n": int(engine.get("grid_n", defaults.grid_n)),
        "mc_paths": int(engine.get("mc_paths", defaults.mc_paths)),
        "mc_dt": float(engine.get("mc_dt", defaults.mc_dt)),
        "seed": engine.get("seed"),
    }
    if len(out["engine"]["box_halfwidths"]) != 2:
        raise ex.ConfigError("engine.box_halfwidths needs two numbers")
    params = dict(cfg.get("params", {}))
    _reject(params, set(ex.EXPERIMENTS), "params")
    for name, p in params.items():
        if not isinstance(p, dict):
            raise ex.ConfigError(f"params.{name} must be a table")
        sig = inspect.signature(ex.JOBS[name])
        _reject(p, set(list(sig.parameters)[1:]), f"params.{name}")
    out["params"] = {k: dict(v) for k, v in params.items()}
    return out


def build_context(cfg: dict) -> ex.Context:
    try:
        model = make_model(cfg["model"]["kind"], cfg["model"]["rho1"])
    except (ModelError, ValueError) as err:
        raise ex.ConfigError(str(err)) from err
    e = cfg["engine"]
    eng = ex.EngineConfig(e["variant"], tuple(e["box_halfwidths"]), e["grid_n"], e["mc_paths"], e["mc_dt"],
                          None if e["seed"] is None else int(e["seed"]))
    echo = {k: v for k, v in cfg.items() if k != "out"}
    return ex.Context(model=model, engine=eng, seed=cfg["seed"], echo=echo)


def run(cfg: dict, out_dir, only=None) -> int:
    """Run the configured experiments; returns the exit status."""
    names = cfg["experiments"]
    if only:
        for n in only:
            if n not in ex.EXPERIMENTS:
                raise ex.ConfigError(f"unknown experiment {n!r}")
        names = [n for n in names if n in only]
        cfg = dict(cfg, experiments=names)
    ctx = build_context(cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_reports, failed = [], False
    for name in names:
        log.info("running %s", name)
        try:
            reports = ex.run_experiment(ctx, name, cfg["params"].get(name))
        except ex.ConfigError:
            raise
        except Exception as err:  # keep partial results and report the failure
            log.error("experiment %s raised: %s", name, err)
            reports = [ex._report(ctx, name, TAGS[name], {}, {"error": f"{type(err).__name__}: {err}"}, 0.0, False)]
        write_jsonl(reports, out_dir / f"{name}.jsonl")
        if name == "doubling":
            rows = reports[0].values.get("rows", [])
            write_table(rows, ["center", "r", "vol_r", "vol_2r", "ratio", "stderr"], out_dir / "doubling_rows.csv")
        all_reports.extend(reports)
        failed |= not all(r.verdict for r in reports)
    write_csv(all_reports, out_dir / "summary.csv")
    text = digest_text([r.to_dict() for r in all_reports])
    (out_dir / "digest.txt").write_text(text, encoding="utf-8")
    (out_dir / "config.json").write_text(json.dumps(cfg, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    sys.stdout.write(text)
    return 1 if failed else 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sublab", description="Numerical lab for sub-Riemannian heat inequalities.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run experiments from a TOML config")
    r.add_argument("--config", help="TOML config file (defaults: all experiments, seed 42)")
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./sublab-out)")
    r.add_argument("--seed", type=int)
    r.add_argument("--only", help="comma-separated subset of experiments")
    r.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("list", help="list experiments and their tags")
    d = sub.add_parser("digest", help="summarize the reports in a directory")
    d.add_argument("dir")
    args = ap.parse_args(argv)

    if args.cmd == "list":
        for name in ex.EXPERIMENTS:
            print(f"{name:<16} {TAGS[name]}")
        return 0
    if args.cmd == "digest":
        print(digest(args.dir), end="")
        return 0

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config else validate_config({})
        if args.seed is not None:
            cfg["seed"] = args.seed
        only = [s.strip() for s in args.only.split(",")] if args.only else None
        out = args.out or cfg.get("out") or os.environ.get(OUT_ENV, "sublab-out")
        # validate everything before touching the output directory
        if only:
            bad = [n for n in only if n not in ex.EXPERIMENTS]
            if bad:
                raise ex.ConfigError(f"unknown experiment(s): {', '.join(bad)}")
        build_context(cfg)
        return run(cfg, out, only)
    except ex.ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
