"""Deterministic SVG views of a realization and a plan."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .cliques import Plan
from .environment import Environment, Realization
from .geometry import Region

WIDTH = 800.0
MARGIN = 20.0
PALETTE = ("#2ca02c", "#d62728", "#1f77b4", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Frame:
    def __init__(self, outer: np.ndarray):
        lo, hi = outer.min(axis=0), outer.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        self.scale = (WIDTH - 2 * MARGIN) / span[0]
        self.lo, self.hi = lo, hi
        self.height = span[1] * self.scale + 2 * MARGIN

    def xy(self, p) -> tuple[str, str]:
        x = MARGIN + (p[0] - self.lo[0]) * self.scale
        y = MARGIN + (self.hi[1] - p[1]) * self.scale
        return _fmt(x), _fmt(y)

    def path(self, rings: Sequence[np.ndarray]) -> str:
        parts = []
        for ring in rings:
            pts = [" ".join(self.xy(p)) for p in ring]
            parts.append("M " + " L ".join(pts) + " Z")
        return " ".join(parts)


def render_svg(
    realization: Realization,
    plan: Plan | np.ndarray | None = None,
    env: Environment | None = None,
    regions: Sequence[Region] | None = None,
    uncovered: np.ndarray | None = None,
) -> str:
    """SVG text: boundary, gray obstacles, dashed stochastic placements, AP triangles,
    optional translucent regions and uncovered samples."""
    f = _Frame(realization.outer)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(WIDTH)}" height="{_fmt(f.height)}" '
        f'viewBox="0 0 {_fmt(WIDTH)} {_fmt(f.height)}">',
        f"<title>realization {realization.index}</title>",
        f'<path d="{f.path([realization.outer])}" fill="#ffffff" stroke="#000000" stroke-width="2"/>',
    ]
    for k, reg in enumerate(regions or []):
        if reg.is_empty:
            continue
        color = PALETTE[k % len(PALETTE)]
        out.append(
            f'<path d="{f.path(reg.rings)}" fill="{color}" fill-opacity="0.25" '
            f'fill-rule="evenodd" stroke="{color}" stroke-width="0.5"/>'
        )
    for obs in realization.obstacles:
        out.append(f'<path d="{f.path([obs])}" fill="#9e9e9e" stroke="#424242" stroke-width="1"/>')
    if env is not None:
        for s in env.stochastic_obstacles:
            for k in range(len(s.placements)):
                out.append(
                    f'<path d="{f.path([s.placed(k)])}" fill="none" stroke="#616161" '
                    f'stroke-width="1" stroke-dasharray="4 3"/>'
                )
    if uncovered is not None and len(uncovered):
        for p in np.asarray(uncovered).reshape(-1, 2):
            x, y = f.xy(p)
            out.append(f'<circle cx="{x}" cy="{y}" r="1.5" fill="#e53935"/>')
    aps = plan.ap_points if isinstance(plan, Plan) else (np.zeros((0, 2)) if plan is None else np.asarray(plan))
    for p in aps.reshape(-1, 2):
        cx, cy = (float(v) for v in f.xy(p))
        tri = [(cx, cy - 8), (cx - 7, cy + 5), (cx + 7, cy + 5)]
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in tri)
        out.append(f'<polygon points="{pts}" fill="#ffeb3b" stroke="#000000" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(path, realization: Realization, plan=None, env=None, regions=None, uncovered=None) -> Path:
    path = Path(path)
    text = render_svg(realization, plan, env, regions, uncovered)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc
    return path
