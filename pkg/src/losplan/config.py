"""Planner settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .coverage import DEFAULT_SEED
from .validation import check_fraction, check_int, check_positive, check_range
from .visibility import RangeSpec


@dataclass(frozen=True)
class PlannerConfig:
    r: float | None = None  # None means unbounded
    alpha_gap: float | None = None  # None plans full coverage
    R_override: float | None = None
    disk_sides: int = 64
    pitch: float | None = None  # None means R / 4
    seed: int = DEFAULT_SEED
    exact_threshold: int = 64
    prune: bool = True  # gap plans may also thin the full clustering

    def __post_init__(self):
        object.__setattr__(self, "r", check_range(self.r))
        object.__setattr__(self, "alpha_gap", check_fraction(self.alpha_gap, "alpha_gap"))
        object.__setattr__(self, "R_override", check_positive(self.R_override, "R", allow_none=True))
        object.__setattr__(self, "pitch", check_positive(self.pitch, "pitch", allow_none=True))
        check_int(self.disk_sides, "disk_sides", minimum=16)
        check_int(self.seed, "seed")
        check_int(self.exact_threshold, "exact_threshold")

    @property
    def range(self) -> RangeSpec:
        return RangeSpec(self.r, self.disk_sides)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["r"] = "unbounded" if self.r is None else self.r
        return d
