from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from losplan import Environment, hyper_triangulate, triangulate
from losplan.geometry import cross

from scenes import pillar_room, hall_environment, random_environment, unit_square, wall_room


def _check_tiling(real, tris, R=None):
    """Positive areas, exact area sum, no hanging vertices, side bound."""
    areas = np.array([t.area for t in tris])
    assert (areas > 0).all()
    assert areas.sum() == pytest.approx(real.area, rel=1e-9)
    if R is not None:
        assert max(t.longest_side for t in tris) <= R * (1 + 1e-12)
    # conformity: each undirected edge is shared by two triangles or lies on a wall
    key = lambda p: (round(float(p[0]), 9), round(float(p[1]), 9))
    edges = Counter()
    for t in tris:
        v = t.vertices
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            edges[tuple(sorted((key(a), key(b))))] += 1
    walls = set()
    for e in real.edges:
        walls.add(tuple(sorted((key(e[0]), key(e[1])))))
    for (a, b), c in edges.items():
        assert c in (1, 2)
        if c == 1:
            # a lone edge must lie along some wall
            mid = (np.array(a) + np.array(b)) / 2
            d = np.abs(cross(real.edges[:, 0], real.edges[:, 1], mid))
            L = np.hypot(*(real.edges[:, 1] - real.edges[:, 0]).T)
            assert (d / L).min() < 1e-7


def test_unit_square_base_triangulation():
    real = unit_square().realizations[0]
    tris = triangulate(real)
    assert len(tris) == 2
    assert [t.index for t in tris] == [1, 2]
    assert all(t.realization == 1 for t in tris)
    _check_tiling(real, tris)


def test_pillar_room_base_triangulation_has_eight_triangles():
    env = pillar_room()
    for real in env.realizations:
        tris = triangulate(real)
        # a quadrilateral with one square hole: 4 + 4 + 2*1 - 2 = 8
        assert len(tris) == 8
        _check_tiling(real, tris)


@pytest.mark.parametrize("R", [1.0, 0.5, 0.3, 0.1])
def test_unit_square_refinement(R):
    real = unit_square().realizations[0]
    tris = hyper_triangulate(real, R)
    _check_tiling(real, tris, R)
    assert [t.index for t in tris] == list(range(1, len(tris) + 1))


def test_refinement_of_a_room_with_a_wall():
    real = wall_room().realizations[0]
    _check_tiling(real, hyper_triangulate(real, 0.4), 0.4)


def test_refinement_is_deterministic():
    real = wall_room().realizations[0]
    a = hyper_triangulate(real, 0.37)
    b = hyper_triangulate(real, 0.37)
    assert len(a) == len(b)
    assert all(np.array_equal(x.vertices, y.vertices) for x, y in zip(a, b))


def test_refinement_rejects_non_positive_side():
    with pytest.raises(ValueError):
        hyper_triangulate(unit_square().realizations[0], 0.0)


def test_hall_triangle_count_near_reference():
    env = hall_environment()
    n = sum(len(hyper_triangulate(r, 2.5)) for r in env.realizations)
    assert abs(n - 13386) <= 0.2 * 13386


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 400), st.floats(0.8, 4.0))
def test_random_layouts_tile_exactly(seed, R):
    env = random_environment(seed)
    real = env.realizations[seed % env.n_realizations]
    _check_tiling(real, hyper_triangulate(real, R), R)


def test_nonconvex_room_with_holes():
    outer = [(0, 0), (6, 0), (6, 2), (3, 2), (3, 5), (0, 5)]
    env = Environment.build(
        outer,
        [[(0.5, 0.5), (1.5, 0.5), (1.0, 1.5)], [(4, 0.5), (5, 0.5), (5, 1.5), (4, 1.5)]],
        [([(0, 0), (0.8, 0), (0.8, 0.8), (0, 0.8)], [(1, 3), (1.8, 3.8)])],
    )
    for real in env.realizations:
        _check_tiling(real, triangulate(real))
        _check_tiling(real, hyper_triangulate(real, 0.7), 0.7)
