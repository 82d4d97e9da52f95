"""Range-limited visibility areas and the exact line-of-sight predicate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon

from .environment import Realization
from .geometry import Region, as_points, cross, point_in_region, regular_polygon
from .partition import TriangleNode

# Directions closer than this (as a sine) to a wall are treated as grazing.
ANG_TOL = 1e-10
# Angular offset of the side rays cast past every corner.
RAY_DELTA = 1e-8


@dataclass(frozen=True)
class RangeSpec:
    """AP range ``r`` in meters (``None`` for unbounded) and the disk polygon order."""

    r: float | None = None
    disk_sides: int = 64

    def __post_init__(self):
        if self.r is not None and not (np.isfinite(self.r) and self.r > 0):
            raise ValueError(f"range must be positive or None, got {self.r!r}")
        if self.disk_sides < 16:
            raise ValueError("disk_sides must be at least 16")

    @property
    def unbounded(self) -> bool:
        return self.r is None

    def resolve(self, diameter: float) -> float:
        """Numeric range; unbounded becomes the layout diameter."""
        return float(diameter) if self.r is None else float(self.r)

    @classmethod
    def parse(cls, value, disk_sides: int = 64) -> "RangeSpec":
        if value is None or (isinstance(value, str) and value.lower() in ("unbounded", "inf")):
            return cls(None, disk_sides)
        value = float(value)
        return cls(None if np.isinf(value) else value, disk_sides)


# ----------------------------------------------------------------- line of sight


def _wedge_contains(d, prev_dir, next_dir):
    """Closed free-space wedge test at ring corners (free space on the left of each edge).

    All arguments broadcast; returns a boolean array.
    """
    d = d / np.maximum(np.linalg.norm(d, axis=-1, keepdims=True), 1e-300)
    pv = prev_dir / np.linalg.norm(prev_dir, axis=-1, keepdims=True)
    nx = next_dir / np.linalg.norm(next_dir, axis=-1, keepdims=True)
    o = np.zeros(2)
    convex = cross(o, nx, pv) > 0
    inside_convex = (cross(o, nx, d) >= -ANG_TOL) & (cross(o, d, pv) >= -ANG_TOL)
    inside_reflex = ~((cross(o, pv, d) > ANG_TOL) & (cross(o, d, nx) > ANG_TOL))
    return np.where(convex, inside_convex, inside_reflex)


def los_clear_many(a, targets, real: Realization) -> np.ndarray:
    """Vectorized LoS from point ``a`` to each target; grazing contact does not block.

    A segment is blocked if it crosses a wall, or if at any corner or wall it
    touches it leaves the closed free space.
    """
    a = np.asarray(a, dtype=float)
    B = as_points(targets)
    tol = real.tol
    E = real.edges
    u, w = E[:, 0], E[:, 1]
    d = B - a  # (S, 2)
    L = np.hypot(d[:, 0], d[:, 1])
    ok = np.ones(len(B), dtype=bool)
    live = L > tol
    if not live.any():
        return ok
    Bl, dl, Ll = B[live], d[live], L[live]

    # signed distances: wall endpoints vs the segment line, segment endpoints vs wall lines
    su = cross(a, Bl[:, None, :], u[None]) / Ll[:, None]
    sw = cross(a, Bl[:, None, :], w[None]) / Ll[:, None]
    e = w - u
    Le = np.hypot(e[:, 0], e[:, 1])
    sa = cross(u, w, a) / Le  # (E,)
    sb = cross(u[None], w[None], Bl[:, None, :]) / Le[None]
    crossing = (((su > tol) & (sw < -tol)) | ((su < -tol) & (sw > tol))) & (
        ((sa[None] > tol) & (sb < -tol)) | ((sa[None] < -tol) & (sb > tol))
    )
    blocked = crossing.any(axis=1)

    # corners on the open segment: both directions must stay in free space
    C, Cp, Cn = real.corners
    sc = cross(a, Bl[:, None, :], C[None]) / Ll[:, None]  # (S, V)
    tc = ((C[None] - a) * dl[:, None, :]).sum(-1) / Ll[:, None]  # distance along segment
    on_open = (np.abs(sc) <= tol) & (tc > tol) & (tc < Ll[:, None] - tol)
    if on_open.any():
        si, ci = np.nonzero(on_open)
        fwd = _wedge_contains(dl[si], Cp[ci], Cn[ci])
        back = _wedge_contains(-dl[si], Cp[ci], Cn[ci])
        bad = ~(fwd & back)
        blocked[si[bad]] = True

    # segment endpoints sitting on a corner or a wall must leave into free space
    blocked |= _leaves_free_space(np.broadcast_to(a, Bl.shape), dl, real)
    blocked |= _leaves_free_space(Bl, -dl, real)

    ok[np.flatnonzero(live)] = ~blocked
    return ok


def _leaves_free_space(pts, dirs, real: Realization) -> np.ndarray:
    """For boundary points, whether heading along ``dirs`` immediately exits free space."""
    tol = real.tol
    out = np.zeros(len(pts), dtype=bool)
    C, Cp, Cn = real.corners
    dist = np.hypot(pts[:, None, 0] - C[None, :, 0], pts[:, None, 1] - C[None, :, 1])
    si, ci = np.nonzero(dist <= tol)
    if len(si):
        out[si[~_wedge_contains(dirs[si], Cp[ci], Cn[ci])]] = True
    E = real.edges
    u, e = E[:, 0], E[:, 1] - E[:, 0]
    Le = np.hypot(e[:, 0], e[:, 1])
    s = cross(u[None], E[None, :, 1], pts[:, None, :]) / Le[None]
    t = ((pts[:, None, :] - u[None]) * e[None]).sum(-1) / Le[None]
    si, ki = np.nonzero((np.abs(s) <= tol) & (t > tol) & (t < Le[None] - tol))
    if len(si):
        dn = dirs[si] / np.linalg.norm(dirs[si], axis=1, keepdims=True)
        side = cross(np.zeros(2), e[ki] / Le[ki, None], dn)
        out[si[side < -ANG_TOL]] = True
    return out


def los_clear(a, b, real: Realization) -> bool:
    """Exact segment-based line of sight inside one realization."""
    for p in (a, b):
        if not _in_free_space(p, real):
            raise ValueError(f"point {tuple(p)} is outside the free space of realization {real.index}")
    return bool(los_clear_many(a, [b], real)[0])


def _in_free_space(p, real: Realization) -> bool:
    if point_in_region(p, real.free_space):
        return True
    return bool(shapely.dwithin(real.free_space.geom, shapely.points(p[0], p[1]), real.tol))


# ------------------------------------------------------------- visibility areas


def _boundary_wedge(P, real: Realization):
    """Free wedge at P as (prev_dir, next_dir) when P lies on the boundary, else None."""
    tol = real.tol
    C, Cp, Cn = real.corners
    dist = np.hypot(*(C - P).T)
    k = int(np.argmin(dist))
    if dist[k] <= tol:
        return Cp[k], Cn[k]
    E = real.edges
    u, w = E[:, 0], E[:, 1]
    e = w - u
    Le = np.hypot(e[:, 0], e[:, 1])
    s = cross(u, w, P) / Le
    t = ((P - u) * e).sum(1) / (Le * Le)
    on = np.flatnonzero((np.abs(s) <= tol) & (t >= 0) & (t <= 1))
    if len(on):
        k = on[0]
        return -e[k], e[k]
    return None


def _cast(P, dirs, real: Realization, t_min: float) -> np.ndarray:
    """Distance to the nearest wall along each unit direction."""
    E = real.edges
    u = E[:, 0]
    e = E[:, 1] - u
    Le = np.hypot(e[:, 0], e[:, 1])
    den = cross(np.zeros(2), dirs[:, None, :], e[None])  # (K, E)
    w = u[None] - P  # (1, E, 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross(np.zeros(2), w, e[None]) / den
        s = cross(np.zeros(2), w, dirs[:, None, :]) / den
    # rays parallel to a wall (grazing along it) never hit that wall
    valid = (np.abs(den) > 1e-12 * Le[None]) & (s >= -1e-10) & (s <= 1 + 1e-10) & (t > t_min)
    if t_min > 0:
        # P sits on these walls; rays inside its free wedge only leave them
        rel = P - u
        a = np.clip((rel * e).sum(1) / (Le * Le), 0.0, 1.0)
        own = np.hypot(*(rel - a[:, None] * e).T) <= real.tol
        valid &= ~own[None]
    t = np.where(valid, t, np.inf)
    hit = t.min(axis=1)
    return np.where(np.isfinite(hit), hit, 2.0 * real.diameter)


def _sight_polygon(P, real: Realization) -> Region:
    """Unbounded visibility polygon of P by angular sweep over all corners."""
    C = real.corners[0]
    rel = C - P
    far = np.hypot(rel[:, 0], rel[:, 1]) > real.tol
    theta = np.arctan2(rel[far, 1], rel[far, 0])
    angles = np.concatenate([theta - RAY_DELTA, theta, theta + RAY_DELTA])
    wedge = _boundary_wedge(P, real)
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    if wedge is not None:
        keep = _wedge_contains(dirs, wedge[0], wedge[1])
        dirs, angles = dirs[keep], angles[keep]
        start = np.arctan2(wedge[1][1], wedge[1][0])
        # a ray along the wedge's first side may compute as a hair below it
        order_key = np.mod(angles - start + 1e-9, 2 * np.pi) - 1e-9
        t_min = real.tol
    else:
        order_key = np.mod(angles, 2 * np.pi)
        t_min = 0.0
    if len(dirs) == 0:
        return Region.empty()
    order = np.lexsort((np.arange(len(order_key)), order_key))
    dirs = dirs[order]
    hits = P + dirs * _cast(P, dirs, real, t_min)[:, None]
    if wedge is not None:
        hits = np.vstack([P[None], hits])
    if len(hits) < 3:
        return Region.empty()
    return Region(Polygon(hits))


def visibility_of_point(P, real: Realization, rng: RangeSpec) -> Region:
    """Points seen from P within range, the disk replaced by its inscribed regular polygon."""
    P = np.asarray(P, dtype=float)
    if not _in_free_space(P, real):
        raise ValueError(f"point {tuple(P)} is outside the free space of realization {real.index}")
    region = _sight_polygon(P, real)
    if rng.unbounded:
        return region
    r = float(rng.r)
    reach = np.hypot(*(real.outer - P).T).max()
    if r * np.cos(np.pi / rng.disk_sides) >= reach:
        return region
    disk = Region(Polygon(regular_polygon(P, r, rng.disk_sides)))
    return region.intersection(disk)


def visibility_of_triangle(
    p: TriangleNode, real: Realization, rng: RangeSpec, point_cache: dict | None = None
) -> Region:
    """Intersection of the visibility areas of the triangle's vertices."""
    region = None
    for v in p.vertices:
        key = (float(v[0]), float(v[1]))
        if point_cache is not None and key in point_cache:
            vr = point_cache[key]
        else:
            vr = visibility_of_point(v, real, rng)
            if point_cache is not None:
                point_cache[key] = vr
        region = vr if region is None else region.intersection(vr)
        if region.is_empty:
            return Region.empty()
    return region


class VisibilityCache:
    """Per-node visibility regions, computed once and then read-only.

    Node regions are stored in node order; vertex regions are shared between
    triangles of the same realization.
    """

    def __init__(self, realizations: Sequence[Realization], rng: RangeSpec):
        self.realizations = {r.index: r for r in realizations}
        self.rng = rng
        self._points: dict[int, dict] = {t: {} for t in self.realizations}
        self._nodes: dict[tuple[int, int], Region] = {}
        self.frozen = False

    def region(self, node: TriangleNode) -> Region:
        key = node.id
        if key not in self._nodes:
            if self.frozen:
                raise KeyError(f"node {key} was not cached before freezing")
            real = self.realizations[node.realization]
            self._nodes[key] = visibility_of_triangle(
                node, real, self.rng, self._points[node.realization]
            )
        return self._nodes[key]

    def populate(self, nodes: Iterable[TriangleNode]) -> "VisibilityCache":
        for n in nodes:
            self.region(n)
        return self

    def freeze(self) -> "VisibilityCache":
        self.frozen = True
        self._points = {t: {} for t in self.realizations}
        return self

    def __contains__(self, node) -> bool:
        return node.id in self._nodes

    def __len__(self):
        return len(self._nodes)


def visibility_of_set(nodes: Sequence[TriangleNode], cache: VisibilityCache) -> Region:
    """Joint visibility of several nodes; stops early once empty."""
    region = None
    for n in nodes:
        vr = cache.region(n)
        region = vr if region is None else region.intersection(vr)
        if region.is_empty:
            return Region.empty()
    return region if region is not None else Region.empty()
