"""Command line interface: ``run``, ``spectral``, ``check-instance`` and ``plot``.

Exit codes: 0 success, 1 failed property check or run, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .checks import instance_suite
from .config import load_config
from .instances import PRESETS, InfeasibleConstruction, build_preset
from .numkit import InputError
from .plotting import X_AXES, PlotError, plot_csvs
from .solvers import DivergenceError
from .topology import TopologyError, iota, laplacian_mixing, mixing_for_gap, parse_topology, validate_mixing

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg.run = replace(cfg.run, out=args.out)
    if args.seed is not None:
        cfg.run = replace(cfg.run, seed=args.seed)
    if args.auto:
        cfg.solver = replace(cfg.solver, auto=True)
    cfg.validate()
    from .experiment import run_experiment

    res = run_experiment(cfg)
    for line in res.notes + res.summary:
        print(line)
    for f in res.files:
        print(f"wrote {f}")
    return EXIT_OK


def cmd_spectral(args) -> int:
    if args.construct is not None:
        mm = mixing_for_gap(args.construct)
        print(f"constructed {mm.graph.name} ({mm.note})")
        graph = mm.graph
    else:
        graph = parse_topology(args.topology)
        mm = laplacian_mixing(graph)
    print(f"n = {mm.n}")
    print(f"lambda2 = {mm.lambda2:.17g}")
    print(f"gamma = {mm.gap:.17g}")
    if graph.name.startswith("linear:") and mm.n >= 2 and args.construct is None:
        print(f"path reference (1-cos(pi/n))/(1+cos(pi/n)) = {iota(mm.n):.17g}")
    ok = True
    for c in validate_mixing(mm, graph, args.gamma):
        ok &= c.passed
        print(f"clause ({c.clause}) {'pass' if c.passed else 'FAIL'}: {c.detail}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_instance(args) -> int:
    objs, _ = build_preset(args.preset)
    if args.declare_L_scale is not None:
        objs = objs.with_declared(L=objs.L * args.declare_L_scale)
        print(f"declared L rescaled by {args.declare_L_scale:g} to {objs.L:.6g}")
    print(f"{objs.name}: n={objs.n}, d={objs.d}, L={objs.L}, mu={objs.mu}, f*={objs.f_star}")
    results = instance_suite(objs, pairs=args.pairs, grad_points=args.grad_points)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"{'pass' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    if "U" in objs.metadata:
        from .checks import span_gaps

        for k, gap, expect in span_gaps(objs):
            print(f"span k={k}: gap {gap:.12g} (Delta(1-k/n) = {expect:.12g})")
    if failed:
        print("failed: " + ", ".join(r.name for r in failed))
        return EXIT_FAIL
    return EXIT_OK


def cmd_plot(args) -> int:
    out = plot_csvs(args.csv, args.x_axis, args.out, args.title)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plsim", description="Decentralized PL optimization benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run solvers from a config file, write CSVs and a figure")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (overrides [run] out)")
    r.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
    r.add_argument("--auto", action="store_true", help="choose parameters automatically")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("spectral", help="spectral gap and mixing-matrix checks of a topology")
    s.add_argument("topology", nargs="?", default=None, help="linear:<n>, complete:<n>, ring:<n> or an edge-list file")
    s.add_argument("--construct", type=float, metavar="GAMMA", help="build a network with this exact gap instead")
    s.add_argument("--gamma", type=float, help="required lower bound on the gap")
    s.set_defaults(func=cmd_spectral)

    c = sub.add_parser("check-instance", help="property suite for an instance preset",
                       description="presets: " + "; ".join(PRESETS.values()))
    c.add_argument("preset")
    c.add_argument("--pairs", type=int, default=1000, help="sample pairs for smoothness and PL checks")
    c.add_argument("--grad-points", type=int, default=100)
    c.add_argument("--declare-L-scale", type=float, help="mis-declare L by this factor (negative control)")
    c.set_defaults(func=cmd_check_instance)

    p = sub.add_parser("plot", help="plot gap curves from metric CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--x-axis", choices=X_AXES, default="lfo_total")
    p.add_argument("--out", required=True)
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "spectral" and (args.topology is None) == (args.construct is None):
        ap.error("spectral needs exactly one of TOPOLOGY or --construct")
    try:
        return args.func(args)
    except (InputError, InfeasibleConstruction, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TopologyError, DivergenceError, PlotError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
