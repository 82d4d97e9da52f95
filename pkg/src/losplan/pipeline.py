"""End-to-end planning: bounds, PV graph, clustering, verification, artifacts."""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import BoundsReport, default_R, irch, ucal
from .cliques import FULL, Plan, independence_lower_bound, mcc, mcp
from .config import PlannerConfig
from .coverage import CoverageReport, coverage_mask, verify_plan
from .environment import Environment
from .geometry import region_intersection
from .graph import BoundViolation, PVGraph, build_pv_graph, graph_stats
from .io import load_environment, write_json
from .svg import emit_svg

log = logging.getLogger(__name__)

STAGES = ("load", "bounds", "graph", "plan", "verify", "write")


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        self.stage = stage
        super().__init__(f"stage {stage} failed: {exc}")


def compute_bounds(env: Environment, config: PlannerConfig) -> tuple[BoundsReport, float]:
    """Bounds report and the side length to plan with; an override above the bound is rejected."""
    r = config.range.resolve(env.diameter)
    report = ucal(r, [irch(o) for o in env.obstacle_shapes])
    R = config.R_override if config.R_override is not None else default_R(report)
    if R > report.R_upper * (1 + 1e-12):
        raise BoundViolation(f"R={R} exceeds the upper bound R'={report.R_upper:.6g}")
    return report, R


def make_plan(g: PVGraph, config: PlannerConfig) -> Plan:
    plan = mcc(g) if config.alpha_gap is None else mcp(g, config.alpha_gap, prune=config.prune)
    h, exact, _ = independence_lower_bound(g, config.exact_threshold)
    plan.lower_bound_h, plan.lower_bound_exact = h, exact
    return plan


def plan_checks(g: PVGraph, plan: Plan) -> dict[str, bool]:
    """Contract invariants of a plan, recomputed from the graph."""
    members = [m for c in plan.clusters for m in c.members]
    cliques_ok = all(g.is_clique(c.members) for c in plan.clusters)
    joint_ok = True
    for c in plan.clusters:
        joint = g.regions[c.members[0]]
        for m in c.members[1:]:
            joint = region_intersection(joint, g.regions[m])
        joint_ok &= not joint.is_empty
    uncovered = [m for v in plan.uncovered.values() for m in v]
    covered = sorted(members + uncovered)
    checks = {
        "clusters_are_cliques": bool(cliques_ok),
        "joint_visibility_nonempty": bool(joint_ok),
        "nodes_partitioned": covered == list(range(len(g))),
    }
    if plan.mode == FULL:
        checks["no_uncovered_nodes"] = not uncovered
        checks["lower_bound_at_most_g"] = plan.lower_bound_h <= plan.g
    else:
        checks["gap_count_within_alpha"] = all(
            len(v) <= plan.alpha_gap * g.counts[t] for t, v in plan.uncovered.items()
        )
    return checks


def coverage_checks(plan: Plan, cov: CoverageReport) -> dict[str, bool]:
    """FULL plans must cover every sample; GAP plans may miss at most their uncovered area,
    up to binomial sampling error."""
    if plan.mode == FULL:
        return {"full_coverage": cov.min_coverage_fraction >= 1.0}
    ok = True
    for c in cov.per_realization:
        gap = max(plan.alpha_gap, plan.gap_area_fraction.get(c.t, 0.0))
        n = max(c.sampled_points, 1)
        slack = 3.0 * math.sqrt(gap * (1 - gap) / n) + 1.0 / n
        ok &= c.coverage_fraction >= 1.0 - gap - slack
    return {"gap_coverage": bool(ok)}


@dataclass
class PipelineResult:
    env: Environment
    report: BoundsReport
    R: float
    graph: PVGraph
    plan: Plan
    coverage: CoverageReport
    checks: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def plan_and_verify(env: Environment, config: PlannerConfig) -> PipelineResult:
    stage = "bounds"
    try:
        report, R = compute_bounds(env, config)
        stage = "graph"
        g = build_pv_graph(env, config.range, R, report=report)
        stage = "plan"
        plan = make_plan(g, config)
        checks = plan_checks(g, plan)
        stage = "verify"
        cov = verify_plan(env, plan, config.range, pitch=config.pitch, R=R, seed=config.seed)
        checks.update(coverage_checks(plan, cov))
    except Exception as exc:
        raise StageError(stage, exc) from exc
    return PipelineResult(env, report, R, g, plan, cov, checks)


def write_artifacts(res: PipelineResult, config: PlannerConfig, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "bounds.json", {**res.report.to_dict(), "R": res.R, "config": config.to_dict()})
    write_json(out / "graph.json", {**graph_stats(res.graph), "r": res.graph.r, "R": res.R})
    write_json(out / "plan.json", {**res.plan.to_dict(res.graph), "checks": res.checks})
    write_json(out / "coverage.json", res.coverage.to_dict())
    for real in res.env.realizations:
        emit_svg(
            out / f"realization_{real.index}.svg",
            real,
            res.plan,
            env=res.env,
            uncovered=res.coverage.uncovered_samples.get(real.index),
        )


def run_pipeline(env_path, config: PlannerConfig, out_dir, stderr=None) -> int:
    """Run every stage and write the artifacts. Returns 0 iff every invariant held."""
    stderr = stderr or sys.stderr
    try:
        try:
            env = load_environment(env_path)
        except Exception as exc:
            raise StageError("load", exc) from exc
        res = plan_and_verify(env, config)
        try:
            write_artifacts(res, config, out_dir)
        except Exception as exc:
            raise StageError("write", exc) from exc
    except StageError as exc:
        print(str(exc), file=stderr)
        return 2 + STAGES.index(exc.stage)
    failed = [k for k, v in res.checks.items() if not v]
    if failed:
        print("invariants violated: " + ", ".join(failed), file=stderr)
        return 1
    return 0


def serving_ap(plan_or_points, env: Environment, realization: int, points, r: float | None) -> np.ndarray:
    """Index of the nearest AP in range and in sight of each point, or -1."""
    aps = plan_or_points.ap_points if isinstance(plan_or_points, Plan) else np.asarray(plan_or_points)
    real = env.realizations[realization - 1]
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    best = np.full(len(pts), -1, dtype=int)
    best_d = np.full(len(pts), np.inf)
    for k, a in enumerate(aps.reshape(-1, 2)):
        seen = coverage_mask(a[None], pts, real, r)
        d = np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
        better = seen & (d < best_d)
        best[better], best_d[better] = k, d[better]
    return best

