"""Triangulation of realizations and longest-side refinement down to a target side length."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .environment import Realization
from .geometry import GeometryError, cross, ring_signed_area


@dataclass(frozen=True, eq=False)
class TriangleNode:
    """Triangle ``index`` (1-based) of realization ``realization``; vertices CCW."""

    realization: int
    index: int
    vertices: np.ndarray

    @property
    def id(self) -> tuple[int, int]:
        return (self.realization, self.index)

    @cached_property
    def longest_side(self) -> float:
        v = self.vertices
        return float(np.sqrt(((v - np.roll(v, -1, axis=0)) ** 2).sum(1)).max())

    @cached_property
    def area(self) -> float:
        return ring_signed_area(self.vertices)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def __repr__(self):
        return f"TriangleNode(t={self.realization}, i={self.index}, longest={self.longest_side:.4g})"


# ---------------------------------------------------------------- ear clipping


def _in_wedge(d, prev_dir, next_dir, tol) -> bool:
    """Whether direction d lies in the closed interior wedge at a CCW-polygon vertex.

    The interior is on the left of the outgoing edge, so the wedge sweeps
    counter-clockwise from ``next_dir`` to ``prev_dir``.
    """
    if cross((0, 0), next_dir, prev_dir) > 0:  # convex vertex
        return cross((0, 0), next_dir, d) >= -tol and cross((0, 0), d, prev_dir) >= -tol
    return not (cross((0, 0), prev_dir, d) > tol and cross((0, 0), d, next_dir) > tol)


def _segment_blocked(p, q, segs, tol) -> bool:
    """True if any segment in ``segs`` touches pq anywhere except at p or q themselves."""
    a, b = segs[:, 0], segs[:, 1]
    d = q - p
    L = np.hypot(*d)
    s_a = cross(p, q, a) / L
    s_b = cross(p, q, b) / L
    e = b - a
    Le = np.hypot(e[:, 0], e[:, 1])
    Le = np.where(Le == 0, 1.0, Le)
    s_p = cross(a, b, p) / Le
    s_q = cross(a, b, q) / Le
    crossing = ((s_a > tol) & (s_b < -tol) | (s_a < -tol) & (s_b > tol)) & (
        (s_p > tol) & (s_q < -tol) | (s_p < -tol) & (s_q > tol)
    )
    if crossing.any():
        return True
    # segment endpoints lying on pq (other than p, q)
    for pts, s in ((a, s_a), (b, s_b)):
        t = ((pts - p) @ d) / (L * L)
        on = (np.abs(s) <= tol) & (t * L > tol) & ((1 - t) * L > tol)
        if on.any():
            return True
    # p or q lying in a segment's interior
    for pt, s in ((p, s_p), (q, s_q)):
        t = ((pt - a) * e).sum(1) / (Le * Le)
        on = (np.abs(s) <= tol) & (t * Le > tol) & ((1 - t) * Le > tol)
        if on.any():
            return True
    return False


def _bridge_holes(outer: np.ndarray, holes: list[np.ndarray], tol: float) -> np.ndarray:
    """Splice CW holes into the CCW outer ring with zero-width bridges.

    Holes are taken in order of their leftmost vertex; each is bridged from
    that vertex to the nearest polygon vertex reachable without touching any
    other boundary.
    """
    poly = [tuple(p) for p in outer]
    order = sorted(range(len(holes)), key=lambda k: (holes[k][:, 0].min(), k))
    pending = {k: holes[k] for k in order}
    for k in order:
        hole = pending.pop(k)
        m = min(range(len(hole)), key=lambda i: (hole[i][0], hole[i][1]))
        M = hole[m]
        hole_prev, hole_next = hole[m - 1] - M, hole[(m + 1) % len(hole)] - M
        P = np.array(poly)
        segs = [np.stack([P, np.roll(P, -1, axis=0)], axis=1)]
        segs += [np.stack([h, np.roll(h, -1, axis=0)], axis=1) for h in [hole, *pending.values()]]
        segs = np.concatenate(segs)
        dist = np.hypot(*(P - M).T)
        chosen = None
        for j in sorted(range(len(P)), key=lambda j: (dist[j], j)):
            V = P[j]
            if dist[j] <= tol:
                continue
            if not _in_wedge(V - M, hole_prev, hole_next, tol):
                continue
            if not _in_wedge(M - V, P[j - 1] - V, P[(j + 1) % len(P)] - V, tol):
                continue
            if _segment_blocked(M, V, segs, tol):
                continue
            chosen = j
            break
        if chosen is None:
            raise GeometryError("could not bridge a hole into the outer boundary")
        loop = [tuple(hole[(m + i) % len(hole)]) for i in range(len(hole))]
        poly = poly[: chosen + 1] + loop + [tuple(M), poly[chosen]] + poly[chosen + 1 :]
    return np.array(poly, dtype=float)


def _min_angle(a, b, c) -> float:
    def ang(p, q, r):
        u, v = q - p, r - p
        nu, nv = np.hypot(*u), np.hypot(*v)
        return np.arccos(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))

    return min(ang(a, b, c), ang(b, c, a), ang(c, a, b))


def _point_in_triangle(pts, a, b, c, tol):
    """Closed containment for a CCW triangle."""
    return (cross(a, b, pts) >= -tol) & (cross(b, c, pts) >= -tol) & (cross(c, a, pts) >= -tol)


def ear_clip(poly: np.ndarray, tol: float) -> list[np.ndarray]:
    """Triangulate a (weakly) simple CCW polygon, possibly containing bridge duplicates.

    Among all valid ears the one with the largest minimum angle is clipped
    first (ties by position), which keeps slivers rare.
    """
    pts = np.asarray(poly, dtype=float)
    idx = list(range(len(pts)))
    scale = max(float(np.ptp(pts, axis=0).max()), 1e-300)
    area_tol = tol * scale
    triangles = []
    while len(idx) > 3:
        n = len(idx)
        best, best_q = None, -1.0
        P = pts[idx]
        for k in range(n):
            a, b, c = P[k - 1], P[k], P[(k + 1) % n]
            if cross(a, b, c) <= area_tol:
                continue
            others = np.ones(n, dtype=bool)
            others[[k - 1, k, (k + 1) % n]] = False
            cand = P[others]
            coincident = (
                (np.hypot(*(cand - a).T) <= tol)
                | (np.hypot(*(cand - b).T) <= tol)
                | (np.hypot(*(cand - c).T) <= tol)
            )
            if np.any(_point_in_triangle(cand[~coincident], a, b, c, area_tol)):
                continue
            q = _min_angle(a, b, c)
            if q > best_q + 1e-12:
                best, best_q = k, q
        if best is None:
            # only degenerate (collinear) corners remain clippable
            flat = [k for k in range(n) if abs(cross(P[k - 1], P[k], P[(k + 1) % n])) <= area_tol]
            if not flat:
                raise GeometryError("ear clipping failed: polygon is not simple")
            del idx[flat[0]]
            continue
        k = best
        triangles.append(np.array([P[k - 1], P[k], P[(k + 1) % n]]))
        del idx[k]
    if len(idx) == 3:
        a, b, c = pts[idx]
        if cross(a, b, c) > area_tol:
            triangles.append(np.array([a, b, c]))
    return triangles


def triangulate(real: Realization) -> list[TriangleNode]:
    """Base triangulation of a realization's free space."""
    tol = real.tol
    poly = _bridge_holes(real.outer, list(real.obstacles), tol)
    tris = ear_clip(poly, tol)
    total = sum(ring_signed_area(t) for t in tris)
    if abs(total - real.area) > max(1e-8, 1e-9 * real.area):
        raise GeometryError(
            f"realization {real.index}: triangulation area {total!r} != free space {real.area!r}"
        )
    return [TriangleNode(real.index, i + 1, t) for i, t in enumerate(tris)]


# ---------------------------------------------------------- hyper-triangulation


class _Mesh:
    """Conforming triangle mesh supporting longest-edge bisection."""

    def __init__(self, triangles: list[np.ndarray]):
        self.coords: list[tuple[float, float]] = []
        self._vid: dict[tuple[float, float], int] = {}
        self.tris: list[tuple[int, int, int] | None] = []
        self.edge_tris: dict[tuple[int, int], list[int]] = {}
        for t in triangles:
            self._add_triangle(tuple(self._vertex(p) for p in t))

    def _vertex(self, p) -> int:
        key = (float(p[0]), float(p[1]))
        if key not in self._vid:
            self._vid[key] = len(self.coords)
            self.coords.append(key)
        return self._vid[key]

    def _add_triangle(self, tri) -> int:
        tid = len(self.tris)
        self.tris.append(tri)
        for e in self._edges(tri):
            self.edge_tris.setdefault(e, []).append(tid)
        return tid

    def _remove_triangle(self, tid: int) -> None:
        for e in self._edges(self.tris[tid]):
            self.edge_tris[e].remove(tid)
            if not self.edge_tris[e]:
                del self.edge_tris[e]
        self.tris[tid] = None

    @staticmethod
    def _edges(tri):
        a, b, c = tri
        return [tuple(sorted(e)) for e in ((a, b), (b, c), (c, a))]

    def edge_key(self, e):
        """Ordering key: longer first, ties to the lexicographically smallest endpoints."""
        p, q = self.coords[e[0]], self.coords[e[1]]
        lo, hi = min(p, q), max(p, q)
        l2 = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
        return (l2, tuple(-c for c in lo + hi))

    def longest_edge(self, tid):
        return max(self._edges(self.tris[tid]), key=self.edge_key)

    def longest_len2(self, tid) -> float:
        return self.edge_key(self.longest_edge(tid))[0]

    def neighbor(self, tid, e):
        others = [t for t in self.edge_tris.get(e, ()) if t != tid]
        return others[0] if others else None

    def bisect(self, e, check: bool = False) -> list[int]:
        """Split edge ``e`` and both triangles sharing it at its midpoint."""
        p, q = self.coords[e[0]], self.coords[e[1]]
        m = self._vertex(((p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0))
        children = []
        for tid in list(self.edge_tris[e]):
            tri = self.tris[tid]
            # rotate so the split edge comes first, preserving orientation
            while {tri[0], tri[1]} != set(e):
                tri = tri[1:] + tri[:1]
            a, b, w = tri
            self._remove_triangle(tid)
            kids = [self._add_triangle((a, m, w)), self._add_triangle((m, b, w))]
            if check:
                parent = abs(self._area((a, b, w)))
                split = sum(abs(self._area(self.tris[k])) for k in kids)
                assert abs(parent - split) <= 1e-9 * max(parent, 1.0), "split lost area"
            children.extend(kids)
        return children

    def _area(self, tri) -> float:
        return ring_signed_area(np.array([self.coords[i] for i in tri]))

    def refine(self, tid: int, check: bool = False) -> list[int]:
        """Longest-edge propagation path bisection until ``tid`` itself is split."""
        created = []
        while self.tris[tid] is not None:
            path = [tid]
            while True:
                e = self.longest_edge(path[-1])
                nb = self.neighbor(path[-1], e)
                if nb is None or self.longest_edge(nb) == e:
                    break
                path.append(nb)
            created.extend(self.bisect(e, check))
        return created

    def alive(self):
        for tid, tri in enumerate(self.tris):
            if tri is not None:
                yield tid, np.array([self.coords[i] for i in tri])


def hyper_triangulate(
    real: Realization, R: float, base: list[TriangleNode] | None = None, check: bool = False
) -> list[TriangleNode]:
    """Refine the base triangulation until no side exceeds ``R``.

    Each step joins the midpoint of a triangle's longest side to the opposite
    vertex. Splits propagate along the longest-edge path so the tiling stays
    conforming: the triangle across a split side is always split too, and
    always at its own longest side.
    """
    if not R > 0:
        raise ValueError(f"R must be positive, got {R!r}")
    if base is None:
        base = triangulate(real)
    mesh = _Mesh([t.vertices for t in base])
    R2 = R * R
    queue = deque(range(len(mesh.tris)))
    while queue:
        tid = queue.popleft()
        if mesh.tris[tid] is None or mesh.longest_len2(tid) <= R2:
            continue
        queue.extend(mesh.refine(tid, check))
    return [TriangleNode(real.index, i + 1, v) for i, (_, v) in enumerate(mesh.alive())]
