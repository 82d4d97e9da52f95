"""Clique clustering of the PV graph into AP locations, and the independence lower bound."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import shapely

from .geometry import GeometryError, Region, region_intersection
from .graph import PVGraph

log = logging.getLogger(__name__)

FULL = "full"
GAP = "gap"


class EmptyVisibilityError(RuntimeError):
    """A node has no visibility area, so no cluster can host it."""


@dataclass(eq=False)
class CliqueCluster:
    members: list[int]  # node positions in the graph, in acceptance order
    joint_visibility: Region
    ap_point: np.ndarray

    def member_ids(self, g: PVGraph) -> list[tuple[int, int]]:
        return [g.nodes[k].id for k in self.members]


@dataclass(eq=False)
class Plan:
    clusters: list[CliqueCluster]
    mode: str = FULL
    alpha_gap: float | None = None
    uncovered: dict[int, list[int]] = field(default_factory=dict)
    lower_bound_h: int = 0
    lower_bound_exact: bool = False
    gap_area_fraction: dict[int, float] = field(default_factory=dict)
    method: str = "clustering"
    packing_g: int | None = None  # cluster count of the plain packing, when it ran

    @property
    def g(self) -> int:
        return len(self.clusters)

    @property
    def ap_points(self) -> np.ndarray:
        return np.array([c.ap_point for c in self.clusters], dtype=float).reshape(-1, 2)

    def to_dict(self, graph: PVGraph | None = None) -> dict:
        def ids(members):
            if graph is None:
                return [int(k) for k in members]
            return [list(graph.nodes[k].id) for k in members]

        return {
            "mode": self.mode,
            "method": self.method,
            "packing_g": self.packing_g,
            "alpha_gap": self.alpha_gap,
            "g": self.g,
            "lower_bound_h": self.lower_bound_h,
            "lower_bound_exact": self.lower_bound_exact,
            "clusters": [
                {
                    "members": ids(c.members),
                    "ap": [float(c.ap_point[0]), float(c.ap_point[1])],
                    "visibility_area": c.joint_visibility.area,
                }
                for c in self.clusters
            ],
            "uncovered": {str(t): ids(v) for t, v in sorted(self.uncovered.items())},
            "uncovered_counts": {str(t): len(v) for t, v in sorted(self.uncovered.items())},
            "gap_area_fraction": {str(t): v for t, v in sorted(self.gap_area_fraction.items())},
        }


# ---------------------------------------------------------------- AP placement


def choose_ap_point(region: Region, tolerance: float | None = None) -> np.ndarray:
    """Pole of inaccessibility of the region's largest component."""
    if region.is_empty:
        raise GeometryError("cannot place an AP in an empty region")
    parts = region.components
    areas = [p.area for p in parts]
    poly = parts[int(np.argmax(areas))]
    x0, y0, x1, y1 = poly.bounds
    if tolerance is None:
        tolerance = max(1e-4 * max(x1 - x0, y1 - y0), 1e-12)
    line = shapely.maximum_inscribed_circle(poly, tolerance)
    pt = shapely.get_point(line, 0)
    if not shapely.contains_properly(poly, pt):
        pt = poly.point_on_surface()
    return np.array([pt.x, pt.y])


# ------------------------------------------------------------- greedy clustering


def _grow_clique(
    g: PVGraph,
    order: np.ndarray,
    on_accept: Callable[[int, list[int]], np.ndarray | None] | None = None,
    block: int = 32,
    check: bool = False,
) -> tuple[list[int], Region, np.ndarray]:
    """Scan ``order`` once, adding each node adjacent to all members whose
    region keeps the joint visibility nonempty.

    ``on_accept`` may return a boolean node mask of nodes to drop from the
    rest of the scan. Returns members, joint region, and the mask of dropped
    nodes.
    """
    geoms = [rg.geom for rg in g.regions]
    seed = int(order[0])
    joint = g.regions[seed]
    if joint.is_empty:
        node = g.nodes[seed]
        raise EmptyVisibilityError(
            f"node {node.id} has an empty visibility area; R is too large for the range"
        )
    members = [seed]
    common = g.adjacency[seed].copy()
    dropped = np.zeros(len(g), dtype=bool)

    def accepted(p):
        if on_accept is not None:
            drop = on_accept(p, members)
            if drop is not None:
                dropped[:] |= drop

    accepted(seed)
    rest = np.asarray(order[1:], dtype=int)
    k = 0
    while k < len(rest):
        window = rest[k : k + block]
        ok = common[window] & ~dropped[window]
        idx = np.flatnonzero(ok)
        found = None
        if len(idx):
            prepared = joint.geom
            shapely.prepare(prepared)
            hits = shapely.intersects(prepared, np.array([geoms[p] for p in window[idx]], dtype=object))
            for pos in idx[hits]:
                p = int(window[pos])
                cand = region_intersection(joint, g.regions[p])
                if not cand.is_empty:
                    found = (pos, p, cand)
                    break
        if found is None:
            k += len(window)
            continue
        pos, p, cand = found
        members.append(p)
        joint = cand
        common &= g.adjacency[p]
        accepted(p)
        k += pos + 1
    if check:
        # recompute from scratch in a different order than it was built
        full = g.regions[members[-1]]
        for m in reversed(members[:-1]):
            full = region_intersection(full, g.regions[m])
        assert abs(full.area - joint.area) <= 1e-6 * max(full.area, 1.0), "joint region drifted"
        assert g.is_clique(members), "cluster is not a clique"
    return members, joint, dropped


def _sorted_remaining(g: PVGraph, remaining: np.ndarray, descending: bool) -> np.ndarray:
    pos = np.flatnonzero(remaining)
    deg = g.adjacency[np.ix_(pos, pos)].sum(axis=1)
    key = -deg if descending else deg
    return pos[np.lexsort((pos, key))]


def mcc(g: PVGraph, check: bool = False) -> Plan:
    """Maximal clique clustering: ascending residual degree, greedy cliques with joint visibility."""
    remaining = np.ones(len(g), dtype=bool)
    clusters = []
    while remaining.any():
        order = _sorted_remaining(g, remaining, descending=False)
        members, joint, _ = _grow_clique(g, order, check=check)
        clusters.append(CliqueCluster(members, joint, choose_ap_point(joint)))
        remaining[members] = False
        log.debug("mcc: cluster %d with %d members", len(clusters), len(members))
    return Plan(clusters, mode=FULL)


def _within_gap(n: int, limit: float, strict: bool) -> bool:
    return n < limit if strict else n <= limit


def _gap_packing(g: PVGraph, alpha_gap: float, strict: bool, check: bool) -> Plan:
    remaining = np.ones(len(g), dtype=bool)
    real_of = g.realization_of
    uncovered: dict[int, list[int]] = {t: [] for t in g.counts}
    clusters = []

    while remaining.any():
        order = _sorted_remaining(g, remaining, descending=True)

        def on_accept(p, members):
            t = real_of[p]
            left = remaining & (real_of == t)
            left[members] = False
            n_left = int(left.sum())
            if _within_gap(n_left, alpha_gap * g.counts[t], strict):
                if n_left:
                    uncovered[t].extend(np.flatnonzero(left).tolist())
                remaining[left] = False
                return left
            return None

        members, joint, _ = _grow_clique(g, order, on_accept=on_accept, check=check)
        clusters.append(CliqueCluster(members, joint, choose_ap_point(joint)))
        remaining[members] = False

    plan = Plan(clusters, mode=GAP, alpha_gap=alpha_gap, method="packing")
    plan.uncovered = {t: sorted(v) for t, v in uncovered.items()}
    return plan


def prune_clustering(g: PVGraph, full: Plan, alpha_gap: float, strict: bool = False) -> Plan:
    """Drop whole clusters of a full-coverage plan while every realization's
    uncovered node count stays within the gap. Smallest clusters go first."""
    real_of = g.realization_of
    used = {t: 0 for t in g.counts}
    kept, uncovered = [], {t: [] for t in g.counts}
    order = sorted(range(full.g), key=lambda k: (len(full.clusters[k].members), k))
    dropped = set()
    for k in order:
        members = np.asarray(full.clusters[k].members, dtype=int)
        ts, n = np.unique(real_of[members], return_counts=True)
        if all(_within_gap(used[t] + c, alpha_gap * g.counts[t], strict) for t, c in zip(ts.tolist(), n.tolist())):
            dropped.add(k)
            for t, c in zip(ts.tolist(), n.tolist()):
                used[t] += c
            for m in members.tolist():
                uncovered[int(real_of[m])].append(m)
    kept = [c for k, c in enumerate(full.clusters) if k not in dropped]
    plan = Plan(kept, mode=GAP, alpha_gap=alpha_gap, method="pruned-clustering")
    plan.uncovered = {t: sorted(v) for t, v in uncovered.items()}
    return plan


def mcp(
    g: PVGraph,
    alpha_gap: float,
    strict: bool = False,
    check: bool = False,
    full: Plan | None = None,
    prune: bool = True,
) -> Plan:
    """Maximum clique packing with a tolerated per-realization gap.

    Nodes are scanned by descending residual degree. After each node of
    realization t joins the cluster, if the nodes of t still outside every
    cluster number at most ``alpha_gap * M(t)`` (strictly fewer when
    ``strict``), they are all dropped as the tolerated gap.

    The greedy packing can need more clusters than the full-coverage
    clustering. With ``prune`` the full clustering (``full``, computed when
    not given) is also thinned under the same gap rule and the plan with
    fewer clusters is returned, packing on ties. ``Plan.method`` says which.
    """
    if not 0.0 < alpha_gap < 1.0:
        raise ValueError(f"alpha_gap must lie in (0, 1), got {alpha_gap!r}")
    plan = _gap_packing(g, alpha_gap, strict, check)
    plan.packing_g = plan.g
    if prune:
        if full is None:
            full = mcc(g, check=check)
        alt = prune_clustering(g, full, alpha_gap, strict)
        if alt.g < plan.g:
            alt.packing_g = plan.g
            plan = alt
    real_of = g.realization_of
    for t, v in plan.uncovered.items():
        total = sum(g.nodes[k].area for k in np.flatnonzero(real_of == t))
        gap = sum(g.nodes[k].area for k in v)
        plan.gap_area_fraction[t] = gap / total if total > 0 else 0.0
        if plan.gap_area_fraction[t] > alpha_gap:
            log.warning(
                "realization %d: uncovered area fraction %.4f exceeds alpha_gap %.4f",
                t, plan.gap_area_fraction[t], alpha_gap,
            )
    return plan


# ----------------------------------------------------------- independence bound


def _greedy_independent_set(adj: np.ndarray) -> list[int]:
    alive = np.ones(len(adj), dtype=bool)
    chosen = []
    while alive.any():
        pos = np.flatnonzero(alive)
        deg = adj[np.ix_(pos, pos)].sum(axis=1)
        v = int(pos[np.lexsort((pos, deg))[0]])
        chosen.append(v)
        alive[v] = False
        alive[adj[v]] = False
    return chosen


def _exact_independent_set(adj: np.ndarray) -> list[int]:
    """Maximum independent set by branch and bound on bitsets.

    The bound partitions the candidates greedily into cliques of the graph;
    an independent set takes at most one node from each.
    """
    n = len(adj)
    nbr = [sum(1 << int(j) for j in np.flatnonzero(adj[i])) for i in range(n)]
    best: list[int] = _greedy_independent_set(adj)

    def cover(P: int) -> list[tuple[int, int]]:
        # returns (vertex, clique-count bound) pairs in branching order
        out = []
        k = 0
        while P:
            k += 1
            Q = P
            while Q:
                v = (Q & -Q).bit_length() - 1
                Q &= nbr[v]  # stay inside a clique of the graph
                P &= ~(1 << v)
                out.append((v, k))
        return out

    def expand(chosen: list[int], P: int):
        nonlocal best
        for v, bound in reversed(cover(P)):
            if len(chosen) + bound <= len(best):
                return
            chosen.append(v)
            newP = P & ~nbr[v] & ~(1 << v)
            if newP:
                expand(chosen, newP)
            elif len(chosen) > len(best):
                best = list(chosen)
            chosen.pop()
            P &= ~(1 << v)

    expand([], (1 << n) - 1)
    return sorted(best)


def independence_lower_bound(
    g: PVGraph | np.ndarray, exact_threshold: int = 64
) -> tuple[int, bool, list[int]]:
    """Size of an independent set (exact maximum when small): a lower bound on AP count."""
    adj = g.adjacency if isinstance(g, PVGraph) else np.asarray(g, dtype=bool)
    if len(adj) == 0:
        return 0, True, []
    if len(adj) <= exact_threshold:
        s = _exact_independent_set(adj)
        return len(s), True, s
    s = _greedy_independent_set(adj)
    return len(s), False, s


def is_independent(adj: np.ndarray, nodes: Sequence[int]) -> bool:
    m = np.asarray(nodes, dtype=int)
    return not adj[np.ix_(m, m)].any()
