"""Stochastic layouts and their concrete realizations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon

from .geometry import EPS_GEOM, GeometryError, Region, as_points, orient_ring, validate_ring


class LayoutError(GeometryError):
    """Invalid environment; ``realization`` is the 1-based index at fault, if any."""

    def __init__(self, message: str, realization: int | None = None, obstacles: tuple[int, ...] = ()):
        self.realization = realization
        self.obstacles = obstacles  # indices into fixed + stochastic obstacles
        if realization is not None:
            message = f"realization {realization}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class StochasticObstacle:
    """A fixed shape translated to one of a finite list of positions."""

    shape: np.ndarray
    placements: np.ndarray

    def placed(self, k: int) -> np.ndarray:
        return self.shape + self.placements[k]


@dataclass(frozen=True, eq=False)
class Realization:
    """One layout instance: outer boundary minus every obstacle for a given placement."""

    index: int
    outer: np.ndarray
    obstacles: tuple[np.ndarray, ...]

    @cached_property
    def free_space(self) -> Region:
        return Region(Polygon(self.outer, list(self.obstacles)))

    @cached_property
    def rings(self) -> list[np.ndarray]:
        """Outer ring CCW then obstacle rings CW, so free space is always on the left."""
        return [self.outer, *self.obstacles]

    @cached_property
    def edges(self) -> np.ndarray:
        """(E, 2, 2) array of directed boundary edges with free space on their left."""
        segs = [np.stack([r, np.roll(r, -1, axis=0)], axis=1) for r in self.rings]
        return np.concatenate(segs, axis=0)

    @cached_property
    def corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Every ring vertex with the offsets to its previous and next vertex."""
        pos, prev, nxt = [], [], []
        for r in self.rings:
            pos.append(r)
            prev.append(np.roll(r, 1, axis=0) - r)
            nxt.append(np.roll(r, -1, axis=0) - r)
        return np.concatenate(pos), np.concatenate(prev), np.concatenate(nxt)

    @cached_property
    def diameter(self) -> float:
        d = self.outer[:, None, :] - self.outer[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    @property
    def tol(self) -> float:
        return EPS_GEOM * self.diameter

    @property
    def area(self) -> float:
        return self.free_space.area


@dataclass(frozen=True, eq=False)
class Environment:
    """Outer boundary, fixed obstacles, and obstacles whose position varies.

    Realizations enumerate the Cartesian product of stochastic placements,
    last obstacle varying fastest.
    """

    outer: np.ndarray
    fixed_obstacles: tuple[np.ndarray, ...] = ()
    stochastic_obstacles: tuple[StochasticObstacle, ...] = ()
    units: str = "meters"

    @classmethod
    def build(
        cls,
        outer,
        fixed_obstacles: Sequence = (),
        stochastic_obstacles: Sequence = (),
        validate: bool = True,
    ) -> "Environment":
        """Normalize orientation and (optionally) validate every realization.

        ``stochastic_obstacles`` holds ``(shape, placements)`` pairs or
        :class:`StochasticObstacle` instances.
        """
        outer_pts = orient_ring(_check_ring(outer, "outer boundary"), ccw=True)
        fixed = tuple(
            orient_ring(_check_ring(o, f"fixed obstacle {k}"), ccw=False)
            for k, o in enumerate(fixed_obstacles)
        )
        stoch = []
        for k, item in enumerate(stochastic_obstacles):
            shape, placements = (
                (item.shape, item.placements) if isinstance(item, StochasticObstacle) else item
            )
            placements = as_points(placements)
            if len(placements) == 0:
                raise LayoutError(f"stochastic obstacle {k} has no placements")
            shape = orient_ring(_check_ring(shape, f"stochastic obstacle {k}"), ccw=False)
            stoch.append(StochasticObstacle(shape, placements))
        env = cls(outer_pts, fixed, tuple(stoch))
        if validate:
            env.validate()
        return env

    @property
    def n_realizations(self) -> int:
        return int(np.prod([len(s.placements) for s in self.stochastic_obstacles], dtype=int))

    @property
    def obstacle_shapes(self) -> list[np.ndarray]:
        """One ring per physical obstacle (stochastic ones at their anchor)."""
        return list(self.fixed_obstacles) + [s.shape for s in self.stochastic_obstacles]

    @cached_property
    def realizations(self) -> tuple[Realization, ...]:
        choices = itertools.product(*[range(len(s.placements)) for s in self.stochastic_obstacles])
        out = []
        for t, combo in enumerate(choices, start=1):
            placed = [s.placed(k) for s, k in zip(self.stochastic_obstacles, combo)]
            out.append(Realization(t, self.outer, tuple(self.fixed_obstacles) + tuple(placed)))
        return tuple(out)

    @cached_property
    def diameter(self) -> float:
        d = self.outer[:, None, :] - self.outer[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def validate(self) -> None:
        outer = Polygon(self.outer)
        for real in self.realizations:
            polys = [Polygon(o) for o in real.obstacles]
            for k, p in enumerate(polys):
                if not outer.contains_properly(p):
                    raise LayoutError(f"obstacle {k} is not strictly inside the boundary", real.index, (k,))
            for i, j in itertools.combinations(range(len(polys)), 2):
                if shapely.intersects(polys[i], polys[j]):
                    raise LayoutError(f"obstacles {i} and {j} overlap or touch", real.index, (i, j))
            if real.free_space.is_empty:
                raise LayoutError("free space is empty", real.index)


def _check_ring(ring, what: str) -> np.ndarray:
    try:
        pts = as_points(ring)
        return validate_ring(pts, tol=EPS_GEOM * max(1.0, float(np.ptp(pts, axis=0).max())))
    except GeometryError as exc:
        raise LayoutError(f"{what}: {exc}") from None
