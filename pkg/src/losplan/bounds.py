"""Upper bound on the refinement side length from the AP range and obstacle sizes."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .geometry import GeometryError, convex_hull, ring_signed_area

SQRT3_6 = math.sqrt(3.0) / 6.0


class RegimeError(ValueError):
    """The cubic bound does not apply to the given range and obstacle size."""


@dataclass(frozen=True)
class BoundsReport:
    r: float
    deltas: tuple[float, ...]
    delta_min: float | None
    small_obstacle_regime: bool
    x_star: float | None
    R_upper: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["deltas"] = list(self.deltas)
        return d


def chebyshev_radius(polygon) -> tuple[float, np.ndarray]:
    """Largest inscribed circle of a convex CCW polygon: (radius, center).

    Solves max rho s.t. n_i . x - c_i >= rho over the edge half-planes by
    enumerating basic solutions: every optimum has three tight constraints,
    so each triple of edges gives a 3x3 system; the best feasible one wins.
    """
    P = np.asarray(polygon, dtype=float)
    if ring_signed_area(P) < 0:
        P = P[::-1]
    e = np.roll(P, -1, axis=0) - P
    L = np.hypot(e[:, 0], e[:, 1])
    keep = L > 0
    P, e, L = P[keep], e[keep], L[keep]
    normals = np.column_stack([-e[:, 1], e[:, 0]]) / L[:, None]  # inward for CCW
    offsets = (normals * P).sum(1)
    scale = float(np.ptp(P, axis=0).max())
    best_rho, best_x = -np.inf, None
    for i, j, k in itertools.combinations(range(len(P)), 3):
        A = np.array(
            [[*normals[i], -1.0], [*normals[j], -1.0], [*normals[k], -1.0]]
        )
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        x, y, rho = np.linalg.solve(A, offsets[[i, j, k]])
        if rho <= best_rho:
            continue
        slack = normals @ np.array([x, y]) - offsets - rho
        if slack.min() >= -1e-9 * max(scale, 1.0):
            best_rho, best_x = rho, np.array([x, y])
    if best_x is None or best_rho <= 0:
        raise GeometryError("polygon has no interior")
    return float(best_rho), best_x


def irch(obstacle) -> float:
    """Inradius of the obstacle's convex hull."""
    hull = convex_hull(obstacle)
    return chebyshev_radius(hull)[0]


def cubic(x, r: float, delta_min: float):
    return x**3 - r * x**2 + delta_min**2 * x + delta_min**2 * r


def cubic_smallest_root(r: float, delta_min: float, tol: float = 1e-9) -> float:
    """Smallest positive root of x^3 - r x^2 + d^2 x + d^2 r by bracketed bisection.

    f(0) = d^2 r > 0 and f rises to a local maximum before falling to its
    local minimum, so the first sign change lies between the two critical
    points when the minimum is non-positive.
    """
    if not (r > 0 and delta_min > 0):
        raise RegimeError("range and obstacle inradius must be positive")
    if delta_min > SQRT3_6 * r * (1 + 1e-12):
        raise RegimeError(
            f"delta_min={delta_min} exceeds sqrt(3)/6*r={SQRT3_6 * r}; the cubic bound does not apply"
        )
    disc = r * r - 3.0 * delta_min**2
    root = math.sqrt(max(disc, 0.0))
    lo = (r - root) / 3.0  # local max
    hi = (r + root) / 3.0  # local min
    f = lambda x: cubic(x, r, delta_min)
    if f(hi) > 0:
        raise RegimeError("cubic has no positive root in (0, r)")
    if f(lo) <= 0:  # only when the critical points merge
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * r:
            break
    x = hi if abs(f(hi)) <= abs(f(lo)) else lo
    if abs(f(x)) >= tol * r**3:
        raise RegimeError(f"bisection did not converge: residual {f(x)!r}")
    return x


def ucal(r: float, deltas: Sequence[float]) -> BoundsReport:
    """Largest refinement side length that keeps every guarantee.

    Large obstacles (or none) leave the bound at r; obstacles with inradius
    below sqrt(3)/6*r tighten it to 2x* from the cubic. sqrt(3)*r never binds
    since r is smaller.
    """
    if not (r > 0 and math.isfinite(r)):
        raise ValueError(f"range must be positive and finite, got {r!r}")
    deltas = tuple(float(d) for d in deltas)
    if any(d <= 0 for d in deltas):
        raise ValueError("obstacle inradii must be positive")
    if not deltas:
        return BoundsReport(r, (), None, False, None, min(r, math.sqrt(3) * r))
    dmin = min(deltas)
    if dmin >= SQRT3_6 * r:
        return BoundsReport(r, deltas, dmin, False, None, r)
    x_star = cubic_smallest_root(r, dmin)
    return BoundsReport(r, deltas, dmin, True, x_star, min(r, 2.0 * x_star))


def default_R(report: BoundsReport) -> float:
    """Planning side length: the upper bound, capped at twice the smallest inradius."""
    if report.delta_min is None:
        return report.R_upper
    return min(report.R_upper, 2.0 * report.delta_min)
