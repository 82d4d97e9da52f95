"""Independent coverage oracle.

Coverage is judged only with exact disks and the segment line-of-sight
predicate. Sampling and point-in-free-space tests are done here on raw ring
edges, so the oracle shares no polygon booleans with the planner.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import shapely

from .cliques import Plan
from .environment import Environment, Realization
from .geometry import cross, point_in_region
from .visibility import RangeSpec, los_clear_many, visibility_of_point

DEFAULT_SEED = 20240521


@dataclass
class RealizationCoverage:
    t: int
    sampled_points: int
    covered_points: int
    flagged_points: int
    coverage_fraction: float
    gap_area_estimate: float


@dataclass
class CoverageReport:
    per_realization: list[RealizationCoverage]
    pitch: float
    uncovered_samples: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def min_coverage_fraction(self) -> float:
        return min((c.coverage_fraction for c in self.per_realization), default=1.0)

    @property
    def worst_realization(self) -> int | None:
        if not self.per_realization:
            return None
        return min(self.per_realization, key=lambda c: (c.coverage_fraction, c.t)).t

    def fraction(self, t: int) -> float:
        return next(c.coverage_fraction for c in self.per_realization if c.t == t)

    def to_dict(self) -> dict:
        return {
            "pitch": self.pitch,
            "min_coverage_fraction": self.min_coverage_fraction,
            "worst_realization": self.worst_realization,
            "per_realization": [asdict(c) for c in self.per_realization],
        }


def _edge_distance(pts: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest wall segment."""
    u, w = edges[:, 0], edges[:, 1]
    e = w - u
    ee = (e * e).sum(1)
    rel = pts[:, None, :] - u[None]
    s = np.clip((rel * e[None]).sum(-1) / ee[None], 0.0, 1.0)
    d = rel - s[..., None] * e[None]
    return np.sqrt((d * d).sum(-1)).min(axis=1)


def _inside_rings(pts: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Even-odd crossing test against all walls; boundary points are unspecified."""
    u, w = edges[:, 0], edges[:, 1]
    y = pts[:, 1][:, None]
    straddle = (u[None, :, 1] > y) != (w[None, :, 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = u[None, :, 0] + (y - u[None, :, 1]) * (w[None, :, 0] - u[None, :, 0]) / (
            w[None, :, 1] - u[None, :, 1]
        )
    hits = straddle & (pts[:, 0][:, None] < xcross)
    return (hits.sum(axis=1) % 2) == 1


def _ring_area(edges: np.ndarray) -> float:
    # free space is on the left of every wall, so the signed sum is the free area
    return 0.5 * float(cross(np.zeros(2), edges[:, 0], edges[:, 1]).sum())


def sample_free_space(real: Realization, pitch: float, seed: int = DEFAULT_SEED):
    """Jittered grid samples in the closed free space, plus a near-wall flag per sample."""
    if not pitch > 0:
        raise ValueError("pitch must be positive")
    E = real.edges
    pts = E.reshape(-1, 2)
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    gx = np.arange(x0 + pitch / 2, x1, pitch)
    gy = np.arange(y0 + pitch / 2, y1, pitch)
    X, Y = np.meshgrid(gx, gy)
    grid = np.column_stack([X.ravel(), Y.ravel()])
    rng = np.random.default_rng([seed, real.index])
    grid = grid + rng.uniform(-0.25 * pitch, 0.25 * pitch, size=grid.shape)
    dist = np.concatenate([_edge_distance(grid[k : k + 4096], E) for k in range(0, len(grid), 4096)]) if len(grid) else np.zeros(0)
    flagged = dist <= real.tol
    inside = _inside_rings(grid, E) | flagged
    return grid[inside], flagged[inside]


def coverage_mask(aps: np.ndarray, samples: np.ndarray, real: Realization, r: float | None) -> np.ndarray:
    covered = np.zeros(len(samples), dtype=bool)
    for a in np.asarray(aps, dtype=float).reshape(-1, 2):
        todo = ~covered
        if r is not None:
            d = np.hypot(samples[:, 0] - a[0], samples[:, 1] - a[1])
            todo &= d <= r + real.tol
        idx = np.flatnonzero(todo)
        for k in range(0, len(idx), 2048):
            chunk = idx[k : k + 2048]
            covered[chunk] = los_clear_many(a, samples[chunk], real)
    return covered


def verify_plan(
    env: Environment,
    plan: Plan | np.ndarray,
    rng: RangeSpec,
    pitch: float | None = None,
    R: float | None = None,
    seed: int = DEFAULT_SEED,
) -> CoverageReport:
    """Sampled coverage of every realization by the plan's APs.

    A sample counts as covered when some AP lies within r of it and has line
    of sight to it in that realization. Samples within the tolerance of a wall
    are flagged and left out of the fractions.
    """
    if pitch is None:
        if R is None:
            raise ValueError("pitch or R is required")
        pitch = R / 4.0
    if R is not None and pitch > R:
        raise ValueError(f"pitch {pitch} exceeds the refinement side {R}; samples would miss triangles")
    aps = plan.ap_points if isinstance(plan, Plan) else np.asarray(plan, dtype=float).reshape(-1, 2)
    out, missed = [], {}
    for real in env.realizations:
        samples, flagged = sample_free_space(real, pitch, seed)
        covered = coverage_mask(aps, samples, real, rng.r)
        counted = ~flagged
        n = int(counted.sum())
        c = int((covered & counted).sum())
        frac = c / n if n else 1.0
        area = _ring_area(real.edges)
        out.append(RealizationCoverage(real.index, n, c, int(flagged.sum()), frac, (1.0 - frac) * area))
        missed[real.index] = samples[counted & ~covered]
    return CoverageReport(out, float(pitch), missed)


# ------------------------------------------------------- visibility cross-check


@dataclass
class CrossCheckReport:
    samples: int = 0
    excluded: int = 0
    soundness_violations: int = 0
    completeness_violations: int = 0
    examples: list = field(default_factory=list, repr=False)

    @property
    def agreement(self) -> float:
        n = self.samples - self.excluded
        bad = self.soundness_violations + self.completeness_violations
        return 1.0 - bad / n if n else 1.0


def _random_free_points(real: Realization, n: int, rs: np.random.Generator) -> np.ndarray:
    E = real.edges
    lo, hi = E.reshape(-1, 2).min(axis=0), E.reshape(-1, 2).max(axis=0)
    got = []
    while sum(len(g) for g in got) < n:
        p = rs.uniform(lo, hi, size=(4 * n, 2))
        got.append(p[_inside_rings(p, E) & (_edge_distance(p, E) > real.tol)])
    return np.concatenate(got)[:n]


def cross_check_visibility_regions(
    env: Environment,
    rng: RangeSpec,
    sample_count: int,
    seed: int = DEFAULT_SEED,
    targets_per_source: int = 100,
) -> CrossCheckReport:
    """Compare visibility-area membership with the segment oracle on random pairs.

    Soundness: X inside V_r(P) must have line of sight to P within r.
    Completeness: LoS within the inscribed-polygon radius must imply membership.
    Pairs whose target lies within the tolerance of V_r(P)'s boundary are excluded.
    """
    rs = np.random.default_rng(seed)
    reals = env.realizations
    rep = CrossCheckReport()

    while rep.samples < sample_count:
        real = reals[int(rs.integers(len(reals)))]
        m = min(targets_per_source, sample_count - rep.samples)
        P = _random_free_points(real, 1, rs)[0]
        X = _random_free_points(real, m, rs)
        V = visibility_of_point(P, real, rng)
        r = rng.resolve(real.diameter)
        inner = np.inf if rng.unbounded else r * np.cos(np.pi / rng.disk_sides)
        los = los_clear_many(P, X, real)
        d = np.hypot(X[:, 0] - P[0], X[:, 1] - P[1])
        pts = shapely.points(X)
        member = np.array([point_in_region(x, V) for x in X], dtype=bool)
        near = shapely.distance(V.geom.boundary, pts) <= real.tol if not V.is_empty else np.zeros(m, bool)
        rep.samples += m
        rep.excluded += int(near.sum())
        unsound = member & ~near & ~(los & (d <= r + real.tol))
        incomplete = ~member & ~near & los & (d <= inner)
        rep.soundness_violations += int(unsound.sum())
        rep.completeness_violations += int(incomplete.sum())
        for k in np.flatnonzero(unsound | incomplete)[:5]:
            rep.examples.append((real.index, tuple(P), tuple(X[k])))
    return rep
