import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import Polygon, box

from losplan import RangeSpec, build_pv_graph, choose_ap_point, independence_lower_bound, mcc, mcp
from losplan.cliques import GAP, EmptyVisibilityError, is_independent, prune_clustering
from losplan.geometry import GeometryError, Region, region_intersection

from scenes import pillar_room, random_environment, wall_room


@pytest.fixture(scope="module")
def pillar_graph():
    return build_pv_graph(pillar_room(), RangeSpec(None), 1e6, check_bound=False)


@pytest.fixture(scope="module")
def wall_graph():
    return build_pv_graph(wall_room(), RangeSpec(1.2), 0.5, check_bound=False)


def _brute_alpha(adj):
    n = len(adj)
    for k in range(n, 0, -1):
        for s in itertools.combinations(range(n), k):
            if not adj[np.ix_(s, s)].any():
                return k
    return 0


def _random_adj(n, p, seed):
    rs = np.random.default_rng(seed)
    A = np.triu(rs.random((n, n)) < p, 1)
    return A | A.T


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 13), st.floats(0.0, 1.0), st.integers(0, 10**6))
def test_exact_independent_set_matches_brute_force(n, p, seed):
    A = _random_adj(n, p, seed)
    h, exact, members = independence_lower_bound(A)
    assert exact
    assert h == _brute_alpha(A)
    assert len(members) == h and is_independent(A, members)


def test_independence_extremes():
    n = 20
    assert independence_lower_bound(~np.eye(n, dtype=bool))[0] == 1
    assert independence_lower_bound(np.zeros((n, n), dtype=bool))[0] == n
    assert independence_lower_bound(np.zeros((0, 0), dtype=bool)) == (0, True, [])


def test_large_graph_falls_back_to_greedy():
    A = _random_adj(80, 0.1, 3)
    h, exact, members = independence_lower_bound(A, exact_threshold=64)
    assert not exact
    assert is_independent(A, members) and h == len(members)
    # the greedy set is maximal
    chosen = np.zeros(80, bool)
    chosen[members] = True
    assert (A[:, chosen].any(axis=1) | chosen).all()


def _assert_valid_plan(g, plan):
    seen = []
    for c in plan.clusters:
        assert g.is_clique(c.members)
        joint = g.regions[c.members[0]]
        for m in c.members[1:]:
            joint = region_intersection(joint, g.regions[m])
        assert not joint.is_empty
        assert joint.geom.buffer(1e-9).covers(Polygon.from_bounds(*np.r_[c.ap_point, c.ap_point]).centroid)
        seen.extend(c.members)
    seen.extend(m for v in plan.uncovered.values() for m in v)
    assert sorted(seen) == list(range(len(g)))


def test_pillar_room_clustering(pillar_graph):
    full = mcc(pillar_graph, check=True)
    assert full.g == 3
    _assert_valid_plan(pillar_graph, full)
    h, exact, _ = independence_lower_bound(pillar_graph)
    assert (h, exact) == (3, True)


@pytest.mark.parametrize("prune", [True, False])
def test_pillar_room_packing(pillar_graph, prune):
    plan = mcp(pillar_graph, 0.25, prune=prune, check=True)
    assert plan.mode == GAP
    assert plan.g == 2
    assert {t: len(v) for t, v in plan.uncovered.items()} == {1: 2, 2: 2}
    _assert_valid_plan(pillar_graph, plan)


def test_strict_gap_comparison(pillar_graph):
    plan = mcp(pillar_graph, 0.25, strict=True, prune=False)
    assert all(len(v) < 0.25 * 8 for v in plan.uncovered.values())


def test_mcp_rejects_bad_alpha(pillar_graph):
    for a in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            mcp(pillar_graph, a)


@pytest.mark.parametrize("alpha", [0.05, 0.1, 0.25, 0.5])
def test_gap_contract_on_wall_room(wall_graph, alpha):
    full = mcc(wall_graph)
    for prune in (False, True):
        plan = mcp(wall_graph, alpha, full=full, prune=prune)
        _assert_valid_plan(wall_graph, plan)
        for t, v in plan.uncovered.items():
            assert len(v) <= alpha * wall_graph.counts[t]
        if prune:
            assert plan.g <= full.g


def test_pruning_respects_the_budget(wall_graph):
    full = mcc(wall_graph)
    for alpha in (0.01, 0.2, 0.6):
        pruned = prune_clustering(wall_graph, full, alpha)
        assert pruned.g <= full.g
        for t, v in pruned.uncovered.items():
            assert len(v) <= alpha * wall_graph.counts[t]
        _assert_valid_plan(wall_graph, pruned)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 300))
def test_random_scene_plans_are_valid(seed):
    env = random_environment(seed)
    g = build_pv_graph(env, RangeSpec(0.5 * env.diameter), 4.0, check_bound=False)
    full = mcc(g)
    _assert_valid_plan(g, full)
    h, _, _ = independence_lower_bound(g, exact_threshold=0)
    assert h <= full.g
    gap = mcp(g, 0.1, full=full)
    _assert_valid_plan(g, gap)
    assert gap.g <= full.g


def test_choose_ap_point_square_centre():
    p = choose_ap_point(Region(box(0, 0, 2, 2)))
    assert p == pytest.approx([1.0, 1.0], abs=1e-3)


def test_choose_ap_point_prefers_largest_component():
    region = Region(box(0, 0, 1, 1).union(box(3, 0, 6, 3)))
    p = choose_ap_point(region)
    assert 3 < p[0] < 6


def test_choose_ap_point_thin_and_nonconvex():
    thin = Region(box(0, 0, 10, 1e-3))
    p = choose_ap_point(thin)
    assert thin.geom.contains(Polygon.from_bounds(*p, *p).centroid)
    ell = Region(Polygon([(0, 0), (4, 0), (4, 1), (1, 1), (1, 4), (0, 4)]))
    p = choose_ap_point(ell)
    assert ell.contains(p)


def test_choose_ap_point_empty():
    with pytest.raises(GeometryError):
        choose_ap_point(Region.empty())


def test_empty_visibility_is_reported(pillar_graph):
    g = pillar_graph
    regions = list(g.regions)
    regions[0] = Region.empty()
    from losplan.graph import PVGraph

    broken = PVGraph(g.nodes, g.adjacency, regions, dict(g.counts))
    with pytest.raises(EmptyVisibilityError):
        mcc(broken)
