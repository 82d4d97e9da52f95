"""Command-line interface."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import PlannerConfig
from .coverage import DEFAULT_SEED, verify_plan
from .graph import build_pv_graph, graph_stats, write_edge_list
from .io import EnvironmentFileError, dumps, load_environment, read_ap_points, write_json
from .partition import hyper_triangulate
from .pipeline import StageError, compute_bounds, make_plan, plan_checks, run_pipeline


def _config(args, alpha=None) -> PlannerConfig:
    return PlannerConfig(
        r=args.r,
        alpha_gap=alpha,
        R_override=args.R,
        disk_sides=args.disk_sides,
        pitch=getattr(args, "pitch", None),
        seed=args.seed,
        exact_threshold=args.exact_threshold,
        prune=not getattr(args, "no_prune", False),
    )


def _emit(obj, out) -> None:
    if out:
        write_json(out, obj)
    else:
        sys.stdout.write(dumps(obj))


def cmd_bounds(args) -> int:
    env = load_environment(args.env)
    report, R = compute_bounds(env, _config(args))
    _emit({**report.to_dict(), "R": R}, args.out)
    return 0


def cmd_triangulate(args) -> int:
    env = load_environment(args.env)
    _, R = compute_bounds(env, _config(args))
    out = {"R": R, "realizations": {}}
    for real in env.realizations:
        tris = hyper_triangulate(real, R)
        out["realizations"][str(real.index)] = [
            {"i": p.index, "vertices": p.vertices.tolist()} for p in tris
        ]
    out["counts"] = {t: len(v) for t, v in out["realizations"].items()}
    if not args.full:
        del out["realizations"]
    _emit(out, args.out)
    return 0


def _graph(args, config):
    env = load_environment(args.env)
    report, R = compute_bounds(env, config)
    return env, R, build_pv_graph(env, config.range, R, report=report)


def cmd_graph(args) -> int:
    config = _config(args)
    _, R, g = _graph(args, config)
    if args.edges:
        write_edge_list(g, args.edges)
    _emit({**graph_stats(g), "r": g.r, "R": R}, args.out)
    return 0


def _plan(args, alpha) -> int:
    config = _config(args, alpha)
    _, _, g = _graph(args, config)
    plan = make_plan(g, config)
    checks = plan_checks(g, plan)
    _emit({**plan.to_dict(g), "checks": checks}, args.out)
    return 0 if all(checks.values()) else 1


def cmd_plan_full(args) -> int:
    return _plan(args, None)


def cmd_plan_gap(args) -> int:
    return _plan(args, args.alpha)


def cmd_verify(args) -> int:
    config = _config(args)
    env = load_environment(args.env)
    _, R = compute_bounds(env, config)
    aps = read_ap_points(args.plan)
    cov = verify_plan(env, aps, config.range, pitch=args.pitch, R=R, seed=args.seed)
    _emit(cov.to_dict(), args.out)
    if args.min_coverage is not None and cov.min_coverage_fraction < args.min_coverage:
        return 1
    return 0


def cmd_run(args) -> int:
    return run_pipeline(args.env, _config(args, args.alpha), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="losplan", description="Line-of-sight access point planning.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="write JSON here instead of stdout"):
        sp.add_argument("env", help="environment JSON file")
        sp.add_argument("--r", default="unbounded", help="AP range in meters or 'unbounded'")
        sp.add_argument("--R", type=float, default=None, help="refinement side override")
        sp.add_argument("--disk-sides", type=int, default=64)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--exact-threshold", type=int, default=64)
        sp.add_argument("--out", default=None, help=out_help)

    sp = sub.add_parser("bounds", help="refinement side bound")
    common(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("triangulate", help="hyper-triangulate every realization")
    common(sp)
    sp.add_argument("--full", action="store_true", help="include triangle vertices")
    sp.set_defaults(func=cmd_triangulate)

    sp = sub.add_parser("graph", help="build the PV graph")
    common(sp)
    sp.add_argument("--edges", default=None, help="edge list path (.gz to compress)")
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("plan-full", help="clique clustering for full coverage")
    common(sp)
    sp.set_defaults(func=cmd_plan_full)

    sp = sub.add_parser("plan-gap", help="clique packing with a tolerated gap")
    common(sp)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--no-prune", action="store_true", help="plain packing only")
    sp.set_defaults(func=cmd_plan_gap)

    sp = sub.add_parser("verify", help="sampled coverage of a plan")
    common(sp)
    sp.add_argument("plan", help="plan JSON file")
    sp.add_argument("--pitch", type=float, default=None, help="sample pitch (default R/4)")
    sp.add_argument("--min-coverage", type=float, default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("run", help="full pipeline into an output directory")
    common(sp, out_help="output directory")
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--no-prune", action="store_true", help="plain packing only")
    sp.add_argument("--pitch", type=float, default=None)
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run" and not args.out:
        parser.error("run requires --out DIR")
    try:
        return args.func(args)
    except (EnvironmentFileError, StageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
