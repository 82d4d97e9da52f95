"""Partition-based visibility graph over all realizations."""

from __future__ import annotations

import gzip
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import shapely

from .bounds import BoundsReport, irch, ucal
from .environment import Environment
from .geometry import EPS_AREA, Region, snap_grid
from .partition import TriangleNode, hyper_triangulate
from .visibility import RangeSpec, VisibilityCache

log = logging.getLogger(__name__)

# Graphs up to this size get the plain pairwise test; larger ones use grid certificates.
EXACT_PAIRWISE_MAX = 400
# Erosion used by the positive certificate; a disk of this radius exceeds EPS_AREA.
_CERT_EROSION = 1e-4


class BoundViolation(ValueError):
    """Requested refinement side exceeds the computed upper bound."""


@dataclass(eq=False)
class PVGraph:
    """Nodes are triangles of every realization; edges join overlapping visibility areas.

    ``adjacency`` is a symmetric boolean matrix with a false diagonal, in node order.
    """

    nodes: list[TriangleNode]
    adjacency: np.ndarray
    regions: list[Region]
    counts: dict[int, int] = field(default_factory=dict)
    r: float | None = None
    R: float | None = None
    cache: VisibilityCache | None = None

    def __post_init__(self):
        n = len(self.nodes)
        self.adjacency = np.asarray(self.adjacency, dtype=bool)
        if self.adjacency.shape != (n, n):
            raise ValueError("adjacency shape does not match the node list")
        if len(self.regions) != n:
            raise ValueError("one region per node is required")
        if not self.counts:
            for node in self.nodes:
                self.counts[node.realization] = self.counts.get(node.realization, 0) + 1
        self.position = {node.id: k for k, node in enumerate(self.nodes)}
        self.realization_of = np.array([node.realization for node in self.nodes], dtype=int)

    def __len__(self):
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def degrees(self, mask: np.ndarray | None = None) -> np.ndarray:
        """Degrees in the subgraph induced by ``mask`` (all nodes when None)."""
        if mask is None:
            return self.adjacency.sum(axis=1)
        return (self.adjacency[:, mask]).sum(axis=1) * mask

    def is_clique(self, members: Sequence[int]) -> bool:
        m = np.asarray(members, dtype=int)
        sub = self.adjacency[np.ix_(m, m)]
        return bool((sub | np.eye(len(m), dtype=bool)).all())

    def edges(self):
        """Sorted (i, j) node positions with i < j."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def check(self) -> None:
        A = self.adjacency
        if A.diagonal().any():
            raise AssertionError("self-loop in PV graph")
        if not (A == A.T).all():
            raise AssertionError("PV graph adjacency is not symmetric")
        if sum(self.counts.values()) != len(self.nodes):
            raise AssertionError("per-realization counts do not add up")


def pair_prefilter(a: TriangleNode, b: TriangleNode, ra: Region, rb: Region, r: float | None) -> bool:
    """False only when the two nodes provably share no visibility."""
    if ra.geom.is_empty or rb.geom.is_empty:
        return False
    ax0, ay0, ax1, ay1 = ra.bounds
    bx0, by0, bx1, by1 = rb.bounds
    if ax1 < bx0 or bx1 < ax0 or ay1 < by0 or by1 < ay0:
        return False
    if r is not None:
        # a shared point is within r of every vertex of both triangles
        d = a.vertices[:, None, :] - b.vertices[None, :, :]
        if np.sqrt((d**2).sum(-1)).max() > 2.0 * r:
            return False
    return True


def _prefilter_pairs(nodes, bounds, r, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized prefilter for node positions ``rows`` against all later nodes."""
    n = len(nodes)
    V = np.stack([nd.vertices for nd in nodes])  # (n, 3, 2)
    out_i, out_j = [], []
    for i in rows:
        j = np.arange(i + 1, n)
        if len(j) == 0 or not np.isfinite(bounds[i]).all():
            continue
        b = bounds[j]
        ok = np.isfinite(b).all(1)
        ok &= ~((bounds[i, 2] < b[:, 0]) | (b[:, 2] < bounds[i, 0]))
        ok &= ~((bounds[i, 3] < b[:, 1]) | (b[:, 3] < bounds[i, 1]))
        if r is not None:
            d = V[i][None, :, None, :] - V[j][:, None, :, :]
            ok &= np.sqrt((d**2).sum(-1)).reshape(len(j), -1).max(1) <= 2.0 * r
        out_i.append(np.full(ok.sum(), i))
        out_j.append(j[ok])
    if not out_i:
        return np.zeros(0, int), np.zeros(0, int)
    return np.concatenate(out_i), np.concatenate(out_j)


def _exact_overlap(geoms: np.ndarray, i: np.ndarray, j: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """Whether each pair's intersection has area at least EPS_AREA."""
    out = np.zeros(len(i), dtype=bool)
    live = [g for g in geoms if not g.is_empty]
    if not live:
        return out
    x0, y0, x1, y1 = shapely.total_bounds(np.array(live, dtype=object))
    grid = snap_grid(max(x1 - x0, y1 - y0))
    for s in range(0, len(i), chunk):
        gi, gj = geoms[i[s : s + chunk]], geoms[j[s : s + chunk]]
        hit = shapely.intersects(gi, gj)
        k = np.flatnonzero(hit)
        if len(k):
            area = shapely.area(shapely.intersection(gi[k], gj[k], grid_size=grid))
            hit[k] = area >= EPS_AREA
        out[s : s + chunk] = hit
    return out


def _grid_membership(geoms, grid_x, grid_y, grow: float) -> np.ndarray:
    """Dense (n_regions, n_grid) float32 indicator of grid points inside each (grown) region."""
    nx, ny = len(grid_x), len(grid_y)
    out = np.zeros((len(geoms), nx * ny), dtype=np.float32)
    for k, g in enumerate(geoms):
        if g.is_empty:
            continue
        if grow < 0:
            g = shapely.buffer(g, grow)
        elif grow > 0:
            g = shapely.buffer(g, grow, quad_segs=8)
        if g.is_empty:
            continue
        x0, y0, x1, y1 = g.bounds
        ix = np.flatnonzero((grid_x >= x0) & (grid_x <= x1))
        iy = np.flatnonzero((grid_y >= y0) & (grid_y <= y1))
        if len(ix) == 0 or len(iy) == 0:
            continue
        gx, gy = np.meshgrid(grid_x[ix], grid_y[iy], indexing="ij")
        shapely.prepare(g)
        inside = shapely.contains_xy(g, gx.ravel(), gy.ravel())
        cols = (ix[:, None] * ny + iy[None, :]).ravel()[inside]
        out[k, cols] = 1.0
    return out


def _shared_point(S: np.ndarray, block: int = 2048) -> np.ndarray:
    n = len(S)
    out = np.zeros((n, n), dtype=bool)
    for s in range(0, n, block):
        out[s : s + block] = (S[s : s + block] @ S.T) > 0.5
    return out


def compute_adjacency(
    nodes: Sequence[TriangleNode],
    regions: Sequence[Region],
    r: float | None,
    method: str = "auto",
    pitch: float | None = None,
) -> np.ndarray:
    """Exact edge predicate area(V(a) & V(b)) >= EPS_AREA for every node pair.

    ``method="pairwise"`` tests every prefiltered pair. ``"grid"`` first settles
    most pairs with two certificates on a sample grid: a grid point inside both
    eroded regions proves overlap, and no grid point inside both dilated
    regions proves separation. Only undecided pairs get the exact test.
    """
    n = len(nodes)
    geoms = np.array([rg.geom for rg in regions], dtype=object)
    bounds = np.array([rg.bounds for rg in regions], dtype=float).reshape(n, 4)
    A = np.zeros((n, n), dtype=bool)
    if n < 2:
        return A
    if method == "auto":
        method = "pairwise" if n <= EXACT_PAIRWISE_MAX else "grid"
    shapely.prepare(geoms[[not g.is_empty for g in geoms]])

    if method == "pairwise":
        i, j = _prefilter_pairs(nodes, bounds, r, np.arange(n))
        ok = _exact_overlap(geoms, i, j)
        A[i[ok], j[ok]] = True
        return A | A.T
    if method != "grid":
        raise ValueError(f"unknown adjacency method {method!r}")

    fin = np.isfinite(bounds).all(1)
    x0, y0 = bounds[fin, 0].min(), bounds[fin, 1].min()
    x1, y1 = bounds[fin, 2].max(), bounds[fin, 3].max()
    if pitch is None:
        pitch = math.sqrt((x1 - x0) * (y1 - y0) / 4096.0)
    grid_x = np.arange(x0 + pitch / 2, x1 + pitch, pitch)
    grid_y = np.arange(y0 + pitch / 2, y1 + pitch, pitch)
    log.info("adjacency: %d nodes, %d grid points", n, len(grid_x) * len(grid_y))

    S = _grid_membership(geoms, grid_x, grid_y, -_CERT_EROSION)
    surely = _shared_point(S)
    del S
    # any common point lies within pitch/sqrt(2) of some grid point
    S = _grid_membership(geoms, grid_x, grid_y, 1.01 * pitch / math.sqrt(2.0) + _CERT_EROSION)
    maybe = _shared_point(S)
    del S
    np.fill_diagonal(surely, False)
    np.fill_diagonal(maybe, False)

    undecided = np.triu(maybe & ~surely, 1)
    ui, uj = np.nonzero(undecided)
    log.info("adjacency: %d certified, %d undecided pairs", int(np.triu(surely, 1).sum()), len(ui))
    if len(ui):
        keep = np.ones(len(ui), dtype=bool)
        if r is not None:
            V = np.stack([nd.vertices for nd in nodes])
            d = V[ui][:, :, None, :] - V[uj][:, None, :, :]
            keep = np.sqrt((d**2).sum(-1)).reshape(len(ui), -1).max(1) <= 2.0 * r
        ui, uj = ui[keep], uj[keep]
        ok = _exact_overlap(geoms, ui, uj)
        surely[ui[ok], uj[ok]] = True
        surely[uj[ok], ui[ok]] = True
    return surely


def build_pv_graph(
    env: Environment,
    rng: RangeSpec,
    R: float,
    *,
    report: BoundsReport | None = None,
    method: str = "auto",
    check_bound: bool = True,
) -> PVGraph:
    """Triangulate every realization at side ``R`` and connect overlapping visibility areas."""
    r_num = rng.resolve(env.diameter)
    if report is None:
        report = ucal(r_num, [irch(o) for o in env.obstacle_shapes])
    if check_bound and R > report.R_upper * (1 + 1e-12):
        raise BoundViolation(f"R={R} exceeds the upper bound R'={report.R_upper}")
    nodes: list[TriangleNode] = []
    counts: dict[int, int] = {}
    for real in env.realizations:
        tris = hyper_triangulate(real, R)
        counts[real.index] = len(tris)
        nodes.extend(tris)
    log.info("pv graph: %d nodes over %d realizations", len(nodes), len(counts))
    cache = VisibilityCache(env.realizations, rng).populate(nodes).freeze()
    regions = [cache.region(nd) for nd in nodes]
    A = compute_adjacency(nodes, regions, None if rng.unbounded else rng.r, method=method)
    return PVGraph(nodes, A, regions, counts, r=rng.r, R=R, cache=cache)


def graph_stats(g: PVGraph) -> dict:
    n = len(g)
    m = g.n_edges
    deg = g.degrees()
    hist = np.bincount(deg, minlength=1) if n else np.zeros(1, int)
    return {
        "nodes": n,
        "edges": m,
        "density": (2.0 * m / (n * (n - 1))) if n > 1 else 0.0,
        "per_realization": {str(t): c for t, c in sorted(g.counts.items())},
        "degree_histogram": {str(k): int(v) for k, v in enumerate(hist) if v},
    }


def write_edge_list(g: PVGraph, path) -> None:
    """One ``t i t' i'`` line per edge, sorted; gzip when the name ends in .gz."""
    path = Path(path)
    lines = []
    for a, b in g.edges():
        ta, ia = g.nodes[a].id
        tb, ib = g.nodes[b].id
        lines.append(f"{ta} {ia} {tb} {ib}\n")
    lines.sort(key=lambda s: tuple(int(x) for x in s.split()))
    data = "".join(lines).encode()
    if path.suffix == ".gz":
        with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="") as fh:
            fh.write(data)
    else:
        path.write_bytes(data)
