"""Estimator-style front end to the planner."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import PlannerConfig
from .coverage import DEFAULT_SEED, verify_plan
from .environment import Environment
from .graph import build_pv_graph
from .io import environment_from_dict, load_environment
from .pipeline import compute_bounds, make_plan, plan_checks, serving_ap
from .validation import check_int, check_points


def _as_environment(X) -> Environment:
    if isinstance(X, Environment):
        return X
    if isinstance(X, (str, Path)):
        return load_environment(X)
    if isinstance(X, dict):
        return environment_from_dict(X)
    raise TypeError(f"expected an Environment, a path or a dict, got {type(X).__name__}")


class AccessPointPlanner(BaseEstimator):
    """Plans AP locations for a stochastic layout.

    ``fit`` takes an :class:`Environment` (or a path / dict in the file
    format). With ``alpha_gap=None`` the plan covers every realization fully;
    otherwise up to that fraction of each realization's triangles may stay
    uncovered.

    Attributes set by ``fit``: ``environment_``, ``bounds_``, ``R_``,
    ``graph_``, ``plan_``, ``ap_points_``, ``checks_``.
    """

    def __init__(self, r=None, alpha_gap=None, R=None, disk_sides=64, pitch=None,
                 seed=DEFAULT_SEED, exact_threshold=64, prune=True):
        self.r = r
        self.alpha_gap = alpha_gap
        self.R = R
        self.disk_sides = disk_sides
        self.pitch = pitch
        self.seed = seed
        self.exact_threshold = exact_threshold
        self.prune = prune

    def _config(self) -> PlannerConfig:
        return PlannerConfig(
            r=self.r,
            alpha_gap=self.alpha_gap,
            R_override=self.R,
            disk_sides=self.disk_sides,
            pitch=self.pitch,
            seed=self.seed,
            exact_threshold=self.exact_threshold,
            prune=self.prune,
        )

    def fit(self, X, y=None):
        config = self._config()
        env = _as_environment(X)
        self.environment_ = env
        self.bounds_, self.R_ = compute_bounds(env, config)
        self.graph_ = build_pv_graph(env, config.range, self.R_, report=self.bounds_)
        self.plan_ = make_plan(self.graph_, config)
        self.ap_points_ = self.plan_.ap_points
        self.checks_ = plan_checks(self.graph_, self.plan_)
        return self

    def predict(self, X, realization: int = 1) -> np.ndarray:
        """Serving AP index (nearest AP in range and sight) for each point, -1 when none."""
        check_is_fitted(self, "plan_")
        pts = check_points(X)
        check_int(realization, "realization", minimum=1)
        if realization > self.environment_.n_realizations:
            raise ValueError(f"realization must be at most {self.environment_.n_realizations}")
        return serving_ap(self.plan_, self.environment_, realization, pts, self._config().r)

    def coverage(self, pitch: float | None = None):
        check_is_fitted(self, "plan_")
        config = self._config()
        return verify_plan(self.environment_, self.plan_, config.range,
                           pitch=pitch or config.pitch, R=self.R_, seed=config.seed)

    def score(self, X=None, y=None) -> float:
        """Worst-realization sampled coverage fraction of the fitted plan."""
        return self.coverage().min_coverage_fraction
