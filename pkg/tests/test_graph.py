import gzip
import itertools

import numpy as np
import pytest
import shapely
from hypothesis import given, settings
from hypothesis import strategies as st

from losplan import RangeSpec, build_pv_graph
from losplan.graph import BoundViolation, compute_adjacency, graph_stats, write_edge_list

from scenes import pillar_room, random_environment, unit_square, wall_room


def _reference_adjacency(g):
    """Plain pairwise overlap of the stored regions, no prefilter or certificates."""
    n = len(g)
    A = np.zeros((n, n), dtype=bool)
    for i, j in itertools.combinations(range(n), 2):
        a, b = g.regions[i].geom, g.regions[j].geom
        if a.is_empty or b.is_empty:
            continue
        A[i, j] = A[j, i] = shapely.intersection(a, b).area > 1e-8
    return A


def test_unit_square_unbounded_is_complete():
    g = build_pv_graph(unit_square(), RangeSpec(None), 0.5, check_bound=False)
    g.check()
    n = len(g)
    assert g.n_edges == n * (n - 1) // 2
    assert g.counts == {1: n}


def test_bound_violation():
    with pytest.raises(BoundViolation):
        build_pv_graph(unit_square(), RangeSpec(0.5), 0.6)


def test_pillar_room_shape():
    g = build_pv_graph(pillar_room(), RangeSpec(None), 1e6, check_bound=False)
    assert g.counts == {1: 8, 2: 8}
    assert [n.id for n in g.nodes[:3]] == [(1, 1), (1, 2), (1, 3)]
    assert g.position[(2, 1)] == 8
    g.check()


@pytest.mark.parametrize("r", [0.6, 1.5, None])
def test_adjacency_matches_pairwise_reference(r):
    env = wall_room()
    g = build_pv_graph(env, RangeSpec(r), 0.6, check_bound=False)
    assert (g.adjacency == _reference_adjacency(g)).all()


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 300), st.floats(0.3, 1.5))
def test_grid_and_pairwise_methods_agree(seed, rfrac):
    env = random_environment(seed)
    r = rfrac * env.diameter
    g = build_pv_graph(env, RangeSpec(r), 3.0, check_bound=False, method="grid")
    pair = compute_adjacency(g.nodes, g.regions, r, method="pairwise")
    assert (g.adjacency == pair).all()
    g.check()


def test_unknown_method():
    g = build_pv_graph(unit_square(), RangeSpec(None), 1.0, check_bound=False)
    with pytest.raises(ValueError):
        compute_adjacency(g.nodes, g.regions, None, method="magic")


def test_edge_list_is_sorted_and_deterministic(tmp_path):
    g = build_pv_graph(pillar_room(), RangeSpec(None), 1e6, check_bound=False)
    plain = tmp_path / "edges.txt"
    write_edge_list(g, plain)
    lines = plain.read_text().splitlines()
    assert len(lines) == g.n_edges
    keys = [tuple(map(int, ln.split())) for ln in lines]
    assert keys == sorted(keys)
    assert all(k[:2] < k[2:] for k in keys)
    a, b = tmp_path / "a.txt.gz", tmp_path / "b.txt.gz"
    write_edge_list(g, a)
    write_edge_list(g, b)
    assert a.read_bytes() == b.read_bytes()
    assert gzip.decompress(a.read_bytes()).decode() == plain.read_text()


def test_graph_stats():
    g = build_pv_graph(pillar_room(), RangeSpec(None), 1e6, check_bound=False)
    s = graph_stats(g)
    assert s["nodes"] == 16
    assert s["edges"] == g.n_edges
    assert sum(s["degree_histogram"].values()) == 16
    assert s["per_realization"] == {"1": 8, "2": 8}
