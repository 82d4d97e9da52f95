"""Planar geometry kernel: rings, regions and the predicates built on them.

Regions wrap shapely (multi)polygons. Everything else here (orientation,
segment predicates, hulls) is plain numpy so that the coverage oracle can
stay independent of the boolean machinery.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Polygon
from shapely.geometry.base import BaseGeometry

# Coincidence tolerance, relative to the layout diameter.
EPS_GEOM = 1e-9
# Absolute area below which a region counts as empty (m^2).
EPS_AREA = 1e-8


class GeometryError(ValueError):
    """Raised for degenerate or invalid geometric input."""


def as_points(points) -> np.ndarray:
    """Coerce to a finite float array of shape (n, 2)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"expected an (n, 2) array of points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("point coordinates must be finite")
    return arr


def ring_signed_area(ring) -> float:
    """Shoelace area; positive iff the ring is counter-clockwise."""
    pts = as_points(ring)
    if len(pts) < 3:
        raise GeometryError("a ring needs at least 3 vertices")
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def orient_ring(ring, ccw: bool = True) -> np.ndarray:
    pts = as_points(ring)
    if (ring_signed_area(pts) > 0) != ccw:
        pts = pts[::-1].copy()
    return pts


def clean_ring(ring, tol: float = 0.0) -> np.ndarray:
    """Drop a repeated closing vertex and consecutive near-duplicates."""
    pts = as_points(ring)
    if len(pts) > 1 and np.allclose(pts[0], pts[-1], atol=tol, rtol=0):
        pts = pts[:-1]
    keep = [0]
    for i in range(1, len(pts)):
        if np.hypot(*(pts[i] - pts[keep[-1]])) > tol:
            keep.append(i)
    pts = pts[keep]
    if len(pts) > 1 and np.hypot(*(pts[0] - pts[-1])) <= tol:
        pts = pts[:-1]
    return pts


def validate_ring(ring, tol: float = 0.0) -> np.ndarray:
    """Return the cleaned ring or raise if it is degenerate or self-intersecting."""
    pts = clean_ring(ring, tol)
    if len(pts) < 3:
        raise GeometryError("a ring needs at least 3 distinct vertices")
    if abs(ring_signed_area(pts)) <= EPS_AREA:
        raise GeometryError("ring has zero area")
    if not shapely.is_valid(Polygon(pts)):
        raise GeometryError(f"ring is not simple: {shapely.is_valid_reason(Polygon(pts))}")
    return pts


def cross(o, a, b):
    """z-component of (a - o) x (b - o); broadcasts over leading axes."""
    o, a, b = np.asarray(o), np.asarray(a), np.asarray(b)
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (
        b[..., 0] - o[..., 0]
    )


def segments_properly_intersect(a, b, tol: float = EPS_GEOM) -> bool:
    """True if the segments cross, or an endpoint of one lies strictly inside the other.

    Shared endpoints and collinear touching at an endpoint are not counted.
    ``tol`` is an absolute distance used for the on-segment tests.
    """
    p1, p2 = np.asarray(a[0], float), np.asarray(a[1], float)
    q1, q2 = np.asarray(b[0], float), np.asarray(b[1], float)

    def side(o, d, p):
        # signed distance of p from the line through o with direction d
        n = np.hypot(*d)
        return float(cross(o, o + d, p)) / n if n > 0 else 0.0

    d1 = side(q1, q2 - q1, p1)
    d2 = side(q1, q2 - q1, p2)
    d3 = side(p1, p2 - p1, q1)
    d4 = side(p1, p2 - p1, q2)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True

    def strictly_inside(p, s0, s1, dist):
        if abs(dist) > tol:
            return False
        d = s1 - s0
        L2 = float(np.dot(d, d))
        if L2 == 0.0:
            return False
        t = float(np.dot(p - s0, d)) / L2
        margin = tol / np.sqrt(L2)
        return margin < t < 1.0 - margin

    return bool(
        strictly_inside(p1, q1, q2, d1)
        or strictly_inside(p2, q1, q2, d2)
        or strictly_inside(q1, p1, p2, d3)
        or strictly_inside(q2, p1, p2, d4)
    )


def convex_hull(points) -> np.ndarray:
    """Andrew's monotone chain; returns the CCW hull without repeated endpoint."""
    pts = np.unique(as_points(points), axis=0)
    if len(pts) < 3:
        raise GeometryError("convex hull needs at least 3 distinct points")

    def half(seq):
        chain: list = []
        for p in seq:
            while len(chain) >= 2 and cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3 or abs(ring_signed_area(hull)) <= EPS_AREA:
        raise GeometryError("points are collinear")
    return hull


def _polygonal_part(geom: BaseGeometry) -> BaseGeometry:
    if geom.is_empty:
        return Polygon()
    if isinstance(geom, (Polygon, MultiPolygon)):
        return geom
    parts = [g for g in shapely.get_parts(geom) if isinstance(g, (Polygon, MultiPolygon))]
    polys = []
    for g in parts:
        polys.extend(shapely.get_parts(g))
    if not polys:
        return Polygon()
    return polys[0] if len(polys) == 1 else MultiPolygon(polys)


@dataclass(frozen=True, eq=False)
class Region:
    """An immutable multi-polygon with holes; the carrier for every visibility area."""

    geom: BaseGeometry
    area: float = field(init=False)

    def __post_init__(self):
        g = self.geom
        if g is None:
            g = Polygon()
        if not g.is_empty and not g.is_valid:
            g = shapely.make_valid(g)
        g = _polygonal_part(g)
        object.__setattr__(self, "geom", g)
        object.__setattr__(self, "area", float(g.area))

    @classmethod
    def empty(cls) -> "Region":
        return cls(Polygon())

    @classmethod
    def from_rings(cls, outer, holes: Iterable = ()) -> "Region":
        return cls(Polygon(as_points(outer), [as_points(h) for h in holes]))

    @property
    def is_empty(self) -> bool:
        return region_is_empty(self)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return tuple(self.geom.bounds) if not self.geom.is_empty else (np.nan,) * 4

    @property
    def components(self) -> list[Polygon]:
        if self.geom.is_empty:
            return []
        return list(shapely.get_parts(self.geom))

    @property
    def rings(self) -> list[np.ndarray]:
        """Exterior rings CCW, holes CW, component by component."""
        out = []
        for poly in self.components:
            poly = shapely.geometry.polygon.orient(poly, 1.0)
            out.append(np.asarray(poly.exterior.coords)[:-1])
            out.extend(np.asarray(h.coords)[:-1] for h in poly.interiors)
        return out

    def intersection(self, other: "Region") -> "Region":
        return region_intersection(self, other)

    def contains(self, point) -> bool:
        return point_in_region(point, self)

    def __repr__(self):
        return f"Region(area={self.area:.6g}, components={len(self.components)})"


def snap_grid(extent: float) -> float:
    """Power-of-two precision grid near EPS_GEOM * extent.

    Floating overlay can fail outright on vertices one ulp apart (it has
    returned bare points for heavily overlapping polygons), and repeated
    intersection of nearly coincident edges piles up sub-tolerance zigzags.
    Snap-rounded overlay avoids the first; a light simplify after it
    removes the second.
    """
    return 2.0 ** math.floor(math.log2(max(EPS_GEOM * extent, 1e-300)))


def region_intersection(a: Region, b: Region) -> Region:
    """Set intersection; slivers thinner than the area tolerance collapse to empty."""
    if a.geom.is_empty or b.geom.is_empty:
        return Region.empty()
    if not shapely.intersects(a.geom, b.geom):
        return Region.empty()
    ax0, ay0, ax1, ay1 = a.geom.bounds
    bx0, by0, bx1, by1 = b.geom.bounds
    extent = max(max(ax1, bx1) - min(ax0, bx0), max(ay1, by1) - min(ay0, by0))
    grid = snap_grid(extent)
    out = shapely.intersection(a.geom, b.geom, grid_size=grid)
    # grazing rays put wall edges a few grid units off the wall; without
    # this the zigzags compound over a long run of intersections
    out = Region(shapely.simplify(out, 16 * grid, preserve_topology=True))
    if out.area < EPS_AREA:
        return Region.empty()
    return out


def region_is_empty(a: Region) -> bool:
    return a.area < EPS_AREA


def point_in_region(point, a: Region) -> bool:
    """Closed-set membership: boundary points count as inside."""
    x, y = float(point[0]), float(point[1])
    if a.geom.is_empty:
        return False
    return bool(shapely.intersects_xy(a.geom, x, y))


def points_in_region(points: Sequence, a: Region) -> np.ndarray:
    pts = as_points(points)
    if a.geom.is_empty:
        return np.zeros(len(pts), dtype=bool)
    return shapely.intersects_xy(a.geom, pts[:, 0], pts[:, 1])


def regular_polygon(center, radius: float, sides: int) -> np.ndarray:
    """Inscribed regular polygon (vertices on the circle), CCW."""
    theta = 2.0 * np.pi * np.arange(sides) / sides
    return np.column_stack(
        [center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)]
    )
