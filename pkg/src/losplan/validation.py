"""Argument checks shared by the estimator, the pipeline and the CLI."""

from __future__ import annotations

import math
from numbers import Real

import numpy as np


def check_positive(value, name: str, allow_none: bool = False) -> float | None:
    if value is None:
        if allow_none:
            return None
        raise ValueError(f"{name} is required")
    if isinstance(value, bool) or not isinstance(value, (Real, np.floating, np.integer)):
        raise TypeError(f"{name} must be a number, got {type(value).__name__}")
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


def check_fraction(value, name: str, allow_none: bool = True) -> float | None:
    """A fraction strictly between 0 and 1."""
    if value is None and allow_none:
        return None
    value = check_positive(value, name)
    if value >= 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_int(value, name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be at least {minimum}, got {value}")
    return int(value)


def check_range(value) -> float | None:
    """AP range: a positive number, or None / "unbounded" / inf for no limit."""
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() in ("unbounded", "inf", "infinity"):
            return None
        try:
            value = float(value)
        except ValueError:
            raise ValueError(f"range must be a number or 'unbounded', got {value!r}") from None
    if isinstance(value, (Real, np.floating)) and math.isinf(value) and value > 0:
        return None
    return check_positive(value, "r")


def check_points(points, name: str = "points") -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.shape == (2,):
        arr = arr[None]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr
