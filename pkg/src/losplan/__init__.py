"""Deterministic line-of-sight access point planning for layouts with movable obstacles."""

from .bounds import BoundsReport, cubic_smallest_root, default_R, irch, ucal
from .cliques import CliqueCluster, Plan, choose_ap_point, independence_lower_bound, mcc, mcp
from .config import PlannerConfig
from .coverage import CoverageReport, cross_check_visibility_regions, verify_plan
from .environment import Environment, LayoutError, Realization
from .estimator import AccessPointPlanner
from .geometry import EPS_AREA, EPS_GEOM, Region
from .graph import PVGraph, build_pv_graph
from .io import dump_environment, load_environment
from .partition import TriangleNode, hyper_triangulate, triangulate
from .pipeline import run_pipeline
from .visibility import RangeSpec, los_clear, visibility_of_point, visibility_of_triangle

__all__ = [
    "AccessPointPlanner",
    "BoundsReport",
    "CliqueCluster",
    "CoverageReport",
    "EPS_AREA",
    "EPS_GEOM",
    "Environment",
    "LayoutError",
    "PVGraph",
    "Plan",
    "PlannerConfig",
    "RangeSpec",
    "Realization",
    "Region",
    "TriangleNode",
    "build_pv_graph",
    "choose_ap_point",
    "cross_check_visibility_regions",
    "cubic_smallest_root",
    "default_R",
    "dump_environment",
    "hyper_triangulate",
    "independence_lower_bound",
    "irch",
    "load_environment",
    "los_clear",
    "mcc",
    "mcp",
    "run_pipeline",
    "triangulate",
    "ucal",
    "verify_plan",
    "visibility_of_point",
    "visibility_of_triangle",
]
