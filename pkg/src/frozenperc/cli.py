"""Command-line interface.

Subcommands mirror the experiments plus the standalone tools: freeze run /
freeze stats, pi estimate / pi table, xlen, gridpath, lowest, arms check.
A JSON config file provides defaults; explicit flags override it.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (EXPERIMENTS, ExperimentConfig, emit_outputs,
                      run_experiment, write_trace_svg)
from .lattice import CARTESIAN_LINF, COEFF_LINF, Annulus, Parallelogram, \
    parse_region_literal
from .nearcrit import (Pi4Table, build_pi4_table, correlation_length,
                       estimate_pi, Unresolved)
from .perctools import ArmSpec, detect_arms, lowest_two_arm_vertices
from .randfield import color_at, sample_tau
from .dynamics import run_frozen
from .nicegeo import Region, extract_gridpath, verify_gridpath


def _common(p):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--n", type=int, nargs="+", help="N value(s)")
    p.add_argument("--k-scale", type=float, dest="k_scale")
    p.add_argument("--lambda", type=float, nargs="+", dest="lambdas")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--metric", choices=[CARTESIAN_LINF, COEFF_LINF])
    p.add_argument("--margin", type=float, dest="margin_factor")
    p.add_argument("--table", dest="table_path")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--format", default="csv,json",
                   help="comma list from csv,json,svg")


def _config_from_args(args, experiment) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    base["experiment"] = experiment
    overrides = dict(
        N=args.n, K=args.k_scale, lambdas=args.lambdas, reps=args.reps,
        seed=args.seed, threads=args.threads, metric=args.metric,
        margin_factor=args.margin_factor, table_path=args.table_path,
        out_dir=args.out_dir)
    return ExperimentConfig.from_json(base, **overrides)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="frozenperc")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_freeze = sub.add_parser("freeze", help="frozen-process experiments")
    fsub = p_freeze.add_subparsers(dest="freeze_cmd", required=True)
    p_run = fsub.add_parser("run", help="run one trace, write JSON/SVG")
    p_run.add_argument("--n", type=int, required=True)
    p_run.add_argument("--box", default=None, help="'box cx cy r' window literal")
    p_run.add_argument("--seed", type=int, default=1)
    p_run.add_argument("--stream", type=int, default=0)
    p_run.add_argument("--metric", default=CARTESIAN_LINF,
                       choices=[CARTESIAN_LINF, COEFF_LINF])
    p_run.add_argument("--margin", type=float, default=2.0)
    p_run.add_argument("--out-dir", default=".")
    p_run.add_argument("--format", default="json,svg")
    p_stats = fsub.add_parser("stats", help="replicated frozen-process experiment")
    p_stats.add_argument("experiment", choices=[e for e in EXPERIMENTS
                                                if e not in ("arm-exponent",
                                                             "corr-length")])
    _common(p_stats)

    p_pi = sub.add_parser("pi", help="arm probability estimation")
    pisub = p_pi.add_subparsers(dest="pi_cmd", required=True)
    p_est = pisub.add_parser("estimate")
    p_est.add_argument("--spec", required=True,
                       help="k,l,sigma[,half] e.g. 4,0,ococ or 3,3,oco,upper")
    p_est.add_argument("--inner", type=int, required=True)
    p_est.add_argument("--outer", type=int, nargs="+", required=True)
    p_est.add_argument("--p-open", type=float, default=0.5)
    p_est.add_argument("--p-closed", type=float, default=None)
    p_est.add_argument("--reps", type=int, default=1000)
    p_est.add_argument("--seed", type=int, default=1)
    p_est.add_argument("--allow-small", action="store_true")
    p_tab = pisub.add_parser("table")
    p_tab.add_argument("--n", type=int, nargs="+", required=True)
    p_tab.add_argument("--reps", type=int, default=20000)
    p_tab.add_argument("--seed", type=int, default=1)
    p_tab.add_argument("--out", required=True)

    p_xlen = sub.add_parser("xlen", help="correlation length search")
    p_xlen.add_argument("--p", type=float, required=True)
    p_xlen.add_argument("--eps", type=float, default=0.25)
    p_xlen.add_argument("--n-max", type=int, default=1024)
    p_xlen.add_argument("--reps", type=int, default=2000)
    p_xlen.add_argument("--seed", type=int, default=1)

    p_grid = sub.add_parser("gridpath", help="extract a thick gridpath")
    p_grid.add_argument("--region", required=True, help="region JSON file")
    p_grid.add_argument("--a", type=int, required=True)
    p_grid.add_argument("--b", type=int, required=True)

    p_low = sub.add_parser("lowest", help="lowest two-arm vertices of B(bN)")
    p_low.add_argument("--n", type=int, required=True)
    p_low.add_argument("--p", type=float, default=0.5)
    p_low.add_argument("--seed", type=int, default=1)
    p_low.add_argument("--stream", type=int, default=0)

    p_arms = sub.add_parser("arms", help="arm event tools")
    asub = p_arms.add_subparsers(dest="arms_cmd", required=True)
    p_chk = asub.add_parser("check", help="decide one arm event on one field")
    p_chk.add_argument("--spec", required=True)
    p_chk.add_argument("--annulus", required=True,
                       help="'annulus cx cy r_in r_out' literal")
    p_chk.add_argument("--p", type=float, default=0.5)
    p_chk.add_argument("--seed", type=int, default=1)
    p_chk.add_argument("--stream", type=int, default=0)

    for exp in ("arm-exponent", "corr-length"):
        p_e = sub.add_parser(exp)
        _common(p_e)
        if exp == "arm-exponent":
            p_e.add_argument("--spec", default="1,0,o")
            p_e.add_argument("--inner", type=int, default=8)
        else:
            p_e.add_argument("--eps", type=float, default=0.25)
            p_e.add_argument("--n-max", type=int, default=1024)

    args = ap.parse_args(argv)

    if args.cmd == "freeze" and args.freeze_cmd == "run":
        box = parse_region_literal(args.box) if args.box else \
            Parallelogram.box((0, 0), int(args.margin * args.n))
        tau = sample_tau(box, args.seed, args.stream)
        trace = run_frozen(tau, args.n, args.metric)
        import os
        os.makedirs(args.out_dir, exist_ok=True)
        stem = os.path.join(args.out_dir, f"trace-n{args.n}-s{args.seed}-{args.stream}")
        fmts = args.format.split(",")
        if "json" in fmts:
            with open(stem + ".json", "w") as fh:
                json.dump({
                    "window": [box.a_lo, box.a_hi, box.b_lo, box.b_hi],
                    "N": args.n, "metric": args.metric, "seed": args.seed,
                    "stream": args.stream,
                    "n_opened": int(trace.opened.sum()),
                    "events": [{"time": e.time, "vertex": list(e.vertex),
                                "size": e.size, "diameter": e.diameter}
                               for e in trace.events]}, fh, indent=1)
            print(stem + ".json")
        if "svg" in fmts:
            print(write_trace_svg(trace, stem + ".svg"))
        return 0

    if args.cmd == "freeze" and args.freeze_cmd == "stats":
        cfg = _config_from_args(args, args.experiment)
        bundle = run_experiment(cfg)
        for p in emit_outputs(bundle, args.format.split(",")):
            print(p)
        return 0

    if args.cmd == "pi" and args.pi_cmd == "estimate":
        spec = _parse_spec(args.spec)
        for outer in args.outer:
            est = estimate_pi(spec, args.inner, outer, args.p_open,
                              args.p_closed, args.reps, args.seed,
                              allow_small=args.allow_small)
            print(f"pi[{args.spec}]({args.inner},{outer}) = {est.mean:.6g} "
                  f"+- {est.stderr:.2g} (n={est.n})")
        return 0

    if args.cmd == "pi" and args.pi_cmd == "table":
        table = build_pi4_table(args.n, args.reps, args.seed)
        table.save(args.out)
        print(args.out)
        return 0

    if args.cmd == "xlen":
        L = correlation_length(args.p, args.eps, args.n_max, args.reps, args.seed)
        if isinstance(L, Unresolved):
            print(f"unresolved below n_max={L.n_max}")
        else:
            print(f"L_{args.eps}({args.p}) = {L}")
        return 0

    if args.cmd == "gridpath":
        with open(args.region) as fh:
            region = Region.from_json(json.load(fh))
        g = extract_gridpath(region, args.a, args.b)
        ok, diam = verify_gridpath(g, region)
        print(json.dumps({"M": g.M, "cells": [list(z) for z in g.cells],
                          "verified": ok, "diameter": diam}))
        return 0

    if args.cmd == "lowest":
        bn = args.n
        R = Parallelogram.box((0, 0), bn)
        tau = sample_tau(R.expanded(1), args.seed, args.stream)
        top = [(a, bn + 1) for a in range(-bn, bn + 1)]
        low = lowest_two_arm_vertices(color_at(tau, args.p), R, top)
        print(json.dumps({"vertices": [list(v) for v in low.vertices],
                          "tests_run": low.tests_run}))
        return 0

    if args.cmd == "arms" and args.arms_cmd == "check":
        spec = _parse_spec(args.spec)
        ann = parse_region_literal(args.annulus)
        if not isinstance(ann, Annulus):
            raise SystemExit("--annulus must be an annulus literal")
        tau = sample_tau(Parallelogram.box(ann.center, ann.outer),
                         args.seed, args.stream)
        print(detect_arms(color_at(tau, args.p), ann, spec))
        return 0

    if args.cmd == "arm-exponent":
        cfg = _config_from_args(args, "arm-exponent")
        k, l, sigma, half = _split_spec(args.spec)
        cfg.spec = {"k": k, "l": l, "sigma": sigma, "half": half,
                    "inner": args.inner, "allow_small": True}
        bundle = run_experiment(cfg)
        for p in emit_outputs(bundle, args.format.split(",")):
            print(p)
        return 0

    if args.cmd == "corr-length":
        cfg = _config_from_args(args, "corr-length")
        cfg.spec = {"eps": args.eps, "n_max": args.n_max}
        bundle = run_experiment(cfg)
        for p in emit_outputs(bundle, args.format.split(",")):
            print(p)
        return 0

    raise SystemExit(f"unhandled command {args.cmd}")


def _split_spec(text):
    parts = text.split(",")
    if len(parts) not in (3, 4):
        raise SystemExit("spec must be k,l,sigma[,half]")
    k, l, sigma = int(parts[0]), int(parts[1]), parts[2]
    half = parts[3] if len(parts) == 4 else "upper"
    return k, l, tuple(sigma), half


def _parse_spec(text) -> ArmSpec:
    k, l, sigma, half = _split_spec(text)
    return ArmSpec(k, l, sigma, half)


if __name__ == "__main__":
    sys.exit(main())
