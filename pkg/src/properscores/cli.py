"""Command-line interface.

    properscores score data.csv --rules crps,scrps,logs --out results/
    properscores diagnose scale --rule scrps --sigmas 0.1,1,10
    properscores experiment volatility --check --out results/

Exit codes: 0 ok, 2 usage or parse error, 3 rule not applicable to a record,
4 diagnostic dominated by Monte Carlo noise, 5 experiment or check failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .distributions import Ensemble, Gaussian, Laplace, NegBin
from .exceptions import (
    DegenerateDistribution,
    ExperimentError,
    NoiseDominated,
    ObservationError,
    SupportError,
    UnsupportedDistribution,
)
from .kernels import MCBudget
from .scores import average_score, parse_rule

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_NOISE, EXIT_EXPERIMENT = 0, 2, 3, 4, 5

KINDS = {"gaussian": (Gaussian, 2), "negbin": (NegBin, 2), "laplace": (Laplace, 2), "ensemble": (Ensemble, None)}


class UsageError(Exception):
    pass


def _err(msg):
    print(f"properscores: error: {msg}", file=sys.stderr)


# ------------------------------------------------------------------- parsing


def make_dist(kind, params):
    kind = kind.strip().lower()
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {sorted(KINDS)}")
    cls, arity = KINDS[kind]
    if kind == "ensemble":
        members = [float(v) for v in params if v.strip()]
        if not members:
            raise ValueError("ensemble needs at least one member")
        return Ensemble(np.asarray(members))
    vals = [float(v) for v in params]
    if len(vals) != arity:
        raise ValueError(f"{kind} takes {arity} parameters, got {len(vals)}")
    return cls(*vals)


def parse_dist_arg(text):
    """``kind:p1,p2`` (ensemble members separated by ``|`` or ``,``)."""
    if ":" not in text:
        raise ValueError(f"distribution must look like kind:params, got {text!r}")
    kind, rest = text.split(":", 1)
    sep = "|" if kind.strip().lower() == "ensemble" and "|" in rest else ","
    return make_dist(kind, rest.split(sep))


def read_records(path):
    """Rows of ``id,kind,params,y``; params separated by ``;``, ensemble members by ``|``."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise UsageError(f"{path}: empty file")
        if header != ["id", "kind", "params", "y"]:
            raise UsageError(f"{path}:1: header must be id,kind,params,y")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise UsageError(f"{path}:{line}: expected 4 fields, got {len(row)}")
            rid, kind, params, y = (c.strip() for c in row)
            sep = "|" if kind.lower() == "ensemble" else ";"
            try:
                dist = make_dist(kind, params.split(sep))
                yv = float(y)
            except ValueError as exc:
                raise UsageError(f"{path}:{line}: {exc}") from exc
            records.append((rid, dist, yv))
    if not records:
        raise UsageError(f"{path}: no records")
    return records


def parse_rules(text):
    if text is None or not text.strip():
        raise UsageError("at least one rule is required (--rules crps,scrps,...)")
    try:
        return [parse_rule(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


# ------------------------------------------------------------------- output


def _emit(out_dir, name, header, rows, fmt):
    from .experiments.io import fmt as f17, write_csv

    if out_dir:
        path = os.path.join(out_dir, name)
        write_csv(path, header, rows)
        return path
    if fmt == "json":
        print(json.dumps([dict(zip(header, [f17(v) for v in r])) for r in rows], indent=2))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f17(v) for v in r])
        sys.stdout.write(buf.getvalue())
    return None


def _summary(out_dir, name, payload):
    from .experiments.io import write_json

    if out_dir:
        write_json(os.path.join(out_dir, name), payload)


# ------------------------------------------------------------------ commands


def cmd_score(args):
    rules = parse_rules(args.rules)
    records = read_records(args.input)
    sign = -1.0 if args.negate else 1.0
    budget = MCBudget(args.mc_budget)
    rows, averages = [], {}
    for rule in rules:
        try:
            rep = average_score(rule, [(d, y) for _, d, y in records], budget=budget, seed=args.seed)
        except ObservationError as exc:
            rid = records[exc.index][0]
            if isinstance(exc.cause, (UnsupportedDistribution, DegenerateDistribution, SupportError)):
                _err(f"rule {rule.label} cannot score record {rid!r}: {exc.cause}")
                return EXIT_MISMATCH
            raise
        for (rid, _, _), s, h, m in zip(records, rep.scores, rep.entropies, rep.methods):
            rows.append((rid, rule.label, sign * s, sign * h, sign * (s - h), m))
        averages[rule.label] = {"average": sign * rep.average, "average_entropy": sign * rep.average_entropy,
                                "average_residual": sign * rep.average_residual}
    header = ("id", "rule", "score", "entropy", "residual", "method")
    _emit(args.out, "scores.csv", header, rows, args.format)
    summary = {"n": len(records), "rules": averages,
               "config": {"input": os.path.basename(args.input), "rules": [r.label for r in rules],
                          "seed": args.seed, "mc_budget": args.mc_budget, "negate": args.negate}}
    if args.out:
        _summary(args.out, "summary.json", summary)
    else:
        print(json.dumps(summary["rules"], sort_keys=True), file=sys.stderr)
    return EXIT_OK


def _rule_with_c(args):
    text = args.rule
    if args.c is not None and ":c=" not in text:
        text = f"{text}:c={args.c}"
    try:
        return parse_rule(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_diagnose(args):
    from . import diagnostics as dg

    rule = _rule_with_c(args)
    try:
        base = parse_dist_arg(args.dist)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    budget = MCBudget(args.mc_budget) if args.mc_budget else None
    if args.which == "scale":
        sigmas = parse_floats(args.sigmas)
        r = tuple(parse_floats(args.direction))
        t_grid = tuple(parse_floats(args.t_grid))
        if len(r) != 2:
            raise UsageError("--direction takes two numbers")
        try:
            res = dg.local_invariance_check(rule, base, r, sigmas, t_grid=t_grid, budget=budget, seed=args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        rows = [(rule.label, s, sh, ph, res.spread, res.exponent) for s, sh, ph in zip(res.sigmas, res.s_hats, res.p_hats)]
        _emit(args.out, "scale.csv", ("rule", "sigma", "s_hat", "p_hat", "spread", "sigma_exponent"), rows, args.format)
    elif args.which == "sensitivity":
        ys = parse_floats(args.ys)
        alpha = dg.estimate_sensitivity(rule, dg.SensitivityProbe(base, tuple(ys)), budget, args.seed)
        _emit(args.out, "sensitivity.csv", ("rule", "dist", "alpha_hat"), [(rule.label, args.dist, alpha)], args.format)
    else:
        if not isinstance(base, Gaussian):
            raise UsageError("propriety sweeps need a gaussian truth")
        res = dg.propriety_sweep(rule, base)
        ok = np.isclose(res.argmax[0], base.mu) and np.isclose(res.argmax[1], base.sigma)
        _emit(args.out, "propriety.csv", ("rule", "truth_mu", "truth_sigma", "argmax_mu", "argmax_sigma", "at_truth"),
              [(rule.label, base.mu, base.sigma, res.argmax[0], res.argmax[1], bool(ok))], args.format)
    return EXIT_OK


def _config(name, args):
    from .experiments.config import load_config

    cfg = load_config(name, args.config)
    if args.seed is not None:
        if name == "entropy":
            cfg = dataclasses.replace(cfg, volatility=dataclasses.replace(cfg.volatility, seed=args.seed))
        elif hasattr(cfg, "seed"):
            cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def cmd_experiment(args):
    from .experiments import checks as ck
    from .experiments import config as cf

    name = args.name
    try:
        cfg = _config(name, args)
    except (ValueError, TypeError, OSError) as exc:
        raise UsageError(f"config: {exc}") from exc
    out = args.out or os.path.join("results", name)
    checks = []
    if name == "volatility":
        from .experiments.volatility import run_volatility

        curve = run_volatility(cfg)
        _emit(out, "volatility.csv", curve.header, curve.table(), "csv")
        if args.check:
            checks = ck.check_volatility(curve, cfg)
    elif name == "spatial":
        from .experiments.spatial import run_spatial

        curve = run_spatial(cfg)
        _emit(out, "spatial.csv", curve.header, curve.table(), "csv")
        if args.check:
            checks = ck.check_spatial(curve, cfg)
    elif name == "nbreg":
        from .experiments.nbreg import run_nbreg

        res = run_nbreg(cfg)
        _emit(out, "nbreg_obs.csv", res.table_header, res.table(), "csv")
        _emit(out, "nbreg_topk.csv", ("k", "crps_ratio", "scrps_ratio"), res.curve(), "csv")
        if args.check:
            checks = ck.check_nbreg(res)
    elif name == "surface":
        from .experiments.surfaces import expected_score_surfaces

        surf = expected_score_surfaces(cfg)
        for kind, grid, data in (("sigma", surf.ratio_grid, surf.sigma), ("mu", surf.p_grid, surf.mu)):
            for rule, z in data.items():
                rows = [(a, b, z[i, j]) for i, a in enumerate(grid) for j, b in enumerate(grid)]
                coords = ("ratio1", "ratio2") if kind == "sigma" else ("p1", "p2")
                _emit(out, f"surface_{kind}_{rule}.csv", coords + ("expected_score",), rows, "csv")
        if args.check:
            checks = ck.check_surface(surf, cfg.sigma1, cfg.sigma2)
    else:
        from .experiments.entropy import entropy_decomposition_trace

        trace = entropy_decomposition_trace(cfg)
        _emit(out, "entropy.csv", trace.header(), trace.table(), "csv")
        if args.check:
            checks = ck.check_entropy(trace)
    payload = {"experiment": name, "config": cf.config_to_dict(cfg)}
    if args.check:
        payload["checks"] = [{"name": n, "passed": bool(p), "detail": d} for n, p, d in checks]
    _summary(out, f"{name}.json", payload)
    if args.check:
        for n, p, d in checks:
            print(f"{'PASS' if p else 'FAIL'}  {n}: {d}")
        if not all(p for _, p, _ in ck.hard_checks(checks)):
            _err("acceptance checks failed")
            return EXIT_EXPERIMENT
    return EXIT_OK


# -------------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="properscores", description="Proper scoring rules and diagnostics")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--seed", type=int, default=None if out_default == "exp" else 0)
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv", help="stdout format without --out")
        sp.add_argument("--mc-budget", type=int, default=100_000 if out_default != "diag" else None)

    sc = sub.add_parser("score", help="score a CSV of forecasts and observations")
    sc.add_argument("input")
    sc.add_argument("--rules", default=None, help="comma-separated, e.g. crps,rcrps:c=2,genkernel:h=log")
    sc.add_argument("--negate", action="store_true", help="flip the sign (negatively oriented output)")
    common(sc)
    sc.set_defaults(func=cmd_score)

    dg = sub.add_parser("diagnose", help="scale functions, sensitivity exponents, propriety")
    dg.add_argument("which", choices=("scale", "sensitivity", "propriety"))
    dg.add_argument("--rule", required=True)
    dg.add_argument("--c", type=float, default=None, help="truncation level for rcrps/rscrps")
    dg.add_argument("--dist", default="gaussian:0,1", help="base/forecast/truth, e.g. gaussian:0,1 or laplace:0,1")
    dg.add_argument("--sigmas", default="0.1,1,10")
    dg.add_argument("--direction", default="1,0")
    dg.add_argument("--t-grid", default="0.2,0.1,0.05,0.025")
    dg.add_argument("--ys", default="100,1000,10000,100000")
    common(dg, "diag")
    dg.set_defaults(func=cmd_diagnose)

    ex = sub.add_parser("experiment", help="run a model-selection study or figure data")
    ex.add_argument("name", choices=("volatility", "spatial", "nbreg", "surface", "entropy"))
    ex.add_argument("--config", default=None, help="TOML file; the shipped default when omitted")
    ex.add_argument("--check", action="store_true", help="run the acceptance assertions")
    common(ex, "exp")
    ex.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "mc_budget", None) is not None and args.mc_budget < 2:
            raise UsageError("--mc-budget must be at least 2")
        return args.func(args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except NoiseDominated as exc:
        _err(f"{exc} (try a coarser --t-grid or a larger --mc-budget)")
        return EXIT_NOISE
    except ExperimentError as exc:
        _err(str(exc))
        return EXIT_EXPERIMENT


if __name__ == "__main__":
    sys.exit(main())
