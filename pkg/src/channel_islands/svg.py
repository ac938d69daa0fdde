"""Deterministic SVG rendering of channel flows: walls, streamlines, islands, critical points."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import TWO_PI
from .operators import ScalarField
from .topology import trace_level_set

WIDTH, HEIGHT, MARGIN = 800, 400, 40
N_LEVELS = 20
COLORS = {"max": "#c0392b", "min": "#2471a3", "saddle": "#000000", "degenerate": "#888888"}


class _Viewport:
    def __init__(self, ymin: float, ymax: float):
        self.ymin, self.ymax = ymin, ymax
        self.sx = (WIDTH - 2 * MARGIN) / TWO_PI
        self.sy = (HEIGHT - 2 * MARGIN) / (ymax - ymin)

    def __call__(self, x, y):
        return MARGIN + self.sx * np.asarray(x), HEIGHT - MARGIN - self.sy * (np.asarray(y) - self.ymin)

    def header(self) -> str:
        return (f"<!-- viewport: px = {MARGIN} + {self.sx:.6f} * x, "
                f"py = {HEIGHT - MARGIN} - {self.sy:.6f} * (y - ({self.ymin:.6f})); "
                f"x in [0, 2pi], y in [{self.ymin:.6f}, {self.ymax:.6f}] -->")


def _runs(points: np.ndarray):
    """Split a polyline, wrapped into [0, 2pi), wherever it jumps across the period."""
    x = np.mod(points[:, 0], TWO_PI)
    y = points[:, 1]
    cut = np.nonzero(np.abs(np.diff(x)) > np.pi)[0] + 1
    start = 0
    for c in list(cut) + [len(x)]:
        if c - start >= 2:
            yield x[start:c], y[start:c]
        start = c


def _path(vp, xs, ys, closed=False) -> str:
    px, py = vp(xs, ys)
    cmds = " ".join(f"{'M' if k == 0 else 'L'}{a:.3f},{b:.3f}" for k, (a, b) in enumerate(zip(px, py)))
    return cmds + (" Z" if closed else "")


def emit_svg(field: ScalarField | None, contours, islands, path, critical_points=None, shape=None,
             n_levels: int = N_LEVELS) -> str:
    """Write an SVG and return its text.

    ``contours`` may be None, in which case ``n_levels`` evenly spaced level
    sets of ``field`` are traced; pass an empty list to draw walls only.
    """
    shape = shape if shape is not None else field.grid.shape
    xs = np.linspace(0.0, TWO_PI, 257)
    bot, top = shape.bottom(xs), shape.top(xs)
    pad = 0.05 * float(np.max(top) - np.min(bot))
    vp = _Viewport(float(np.min(bot)) - pad, float(np.max(top)) + pad)

    if contours is None and field is not None:
        lo, hi = float(field.values.min()), float(field.values.max())
        levels = lo + (hi - lo) * (np.arange(1, n_levels + 1) / (n_levels + 1))
        contours = [c for lv in levels for c in trace_level_set(field, lv)]
    contours = contours or []

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        vp.header(),
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        '<g id="walls" stroke="#000000" stroke-width="2" fill="none">',
        f'<path d="{_path(vp, xs, bot)}"/>',
        f'<path d="{_path(vp, xs, top)}"/>',
        "</g>",
    ]
    by_level: dict[float, list] = {}
    for c in contours:
        by_level.setdefault(round(float(c.level), 12), []).append(c)
    for k, lv in enumerate(sorted(by_level)):
        out.append(f'<g id="level-{k}" stroke="#5d6d7e" stroke-width="0.8" fill="none">')
        for c in by_level[lv]:
            colour = ' stroke="#e67e22"' if c.kind == "contractible" else ""
            for rx, ry in _runs(c.points):
                out.append(f'<path{colour} d="{_path(vp, rx, ry)}"/>')
        out.append("</g>")
    x0, y0 = vp(0.0, vp.ymax)
    x1, y1 = vp(TWO_PI, vp.ymin)
    out.append(f'<clipPath id="plot"><rect x="{x0:.3f}" y="{y0:.3f}" width="{x1 - x0:.3f}" height="{y1 - y0:.3f}"/></clipPath>')
    out.append('<g id="islands" clip-path="url(#plot)" fill="#f5b041" fill-opacity="0.6" stroke="#e67e22" stroke-width="1">')
    for isl in islands or []:
        if not isl.levels:
            continue
        outer = max(isl.levels, key=lambda lv: lv.delta).contour.points
        for shift in (-TWO_PI, 0.0, TWO_PI):
            xs_ = outer[:, 0] + shift
            if xs_.max() > 0 and xs_.min() < TWO_PI:
                out.append(f'<path d="{_path(vp, xs_, outer[:, 1], closed=True)}"/>')
    out.append("</g>")
    out.append('<g id="critical-points">')
    for p in critical_points or []:
        px, py = vp(p.x, p.y)
        col = COLORS.get(p.kind, "#888888")
        if p.kind == "saddle":
            out.append(f'<path d="M{px - 4:.3f},{py - 4:.3f} L{px + 4:.3f},{py + 4:.3f} M{px - 4:.3f},{py + 4:.3f} '
                       f'L{px + 4:.3f},{py - 4:.3f}" stroke="{col}" stroke-width="1.5"/>')
        else:
            out.append(f'<circle cx="{px:.3f}" cy="{py:.3f}" r="3" fill="{col}"/>')
    out.append("</g>")
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    Path(path).write_text(text)
    return text
