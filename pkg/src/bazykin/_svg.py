"""Tiny static SVG renderer for CLI output.

Only polylines, filled cells and a few markers; enough to eyeball a
trajectory, a raster or a two-parameter diagram without plotting tools.
"""

from __future__ import annotations

import numpy as np

from .bifurcation import BifDiagram
from .dynamics import BasinRaster, LimitCycle, SaddleManifolds, Trajectory
from .serialize import Table

_SIZE = 480.0
_MARGIN = 40.0

_CURVE_COLORS = {
    "sn": "#d62728",
    "hopf": "#1f77b4",
    "hom": "#2ca02c",
    "wu_ne": "#d62728",
    "wu_sw": "#d62728",
    "ws_ne": "#1f77b4",
    "ws_sw": "#1f77b4",
}

_LABEL_COLORS = {
    "ORIGIN": "#444444",
    "CARRYING_CAPACITY": "#8c564b",
    "P2": "#1f77b4",
    "STABLE_CYCLE": "#2ca02c",
    "UNDETERMINED": "#dddddd",
}


class _Frame:
    def __init__(self, xs, ys):
        self.x_lo, self.x_hi = float(min(xs)), float(max(xs))
        self.y_lo, self.y_hi = float(min(ys)), float(max(ys))
        if self.x_hi == self.x_lo:
            self.x_hi += 1.0
        if self.y_hi == self.y_lo:
            self.y_hi += 1.0
        self.span = _SIZE - 2.0 * _MARGIN

    def x(self, v):
        return _MARGIN + self.span * (v - self.x_lo) / (self.x_hi - self.x_lo)

    def y(self, v):
        return _SIZE - _MARGIN - self.span * (v - self.y_lo) / (
            self.y_hi - self.y_lo)


def _polyline(frame, pts, color):
    coords = " ".join(f"{frame.x(x):.2f},{frame.y(y):.2f}" for x, y in pts)
    return (f'<polyline fill="none" stroke="{color}" stroke-width="1" '
            f'points="{coords}"/>')


def _document(elements):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{_SIZE:.0f}" height="{_SIZE:.0f}" '
            f'viewBox="0 0 {_SIZE:.0f} {_SIZE:.0f}">')
    frame_rect = (f'<rect x="{_MARGIN}" y="{_MARGIN}" '
                  f'width="{_SIZE - 2 * _MARGIN}" '
                  f'height="{_SIZE - 2 * _MARGIN}" '
                  f'fill="none" stroke="#000000"/>')
    return "\n".join([head, frame_rect] + elements + ["</svg>"]).encode()


def _curves(named_point_lists):
    xs, ys = [], []
    for _, pts in named_point_lists:
        xs.extend(p[0] for p in pts)
        ys.extend(p[1] for p in pts)
    frame = _Frame(xs, ys)
    elems = []
    for name, pts in named_point_lists:
        color = _CURVE_COLORS.get(name, "#000000")
        elems.append(_polyline(frame, pts, color))
    return frame, elems


def render_svg(product) -> bytes:
    if isinstance(product, Trajectory):
        pts = [(s.u, s.v) for _, s in product.samples]
        _, elems = _curves([("orbit", pts)])
        return _document(elems)
    if isinstance(product, SaddleManifolds):
        named = [(n, [(s.u, s.v) for _, s in getattr(product, n).samples])
                 for n in ("wu_ne", "wu_sw", "ws_ne", "ws_sw")]
        _, elems = _curves(named)
        return _document(elems)
    if isinstance(product, list) and all(
            isinstance(c, LimitCycle) for c in product) and product:
        named = [("cycle", [(s.u, s.v) for s in c.points]) for c in product]
        _, elems = _curves(named)
        return _document(elems)
    if isinstance(product, BifDiagram):
        named = [(n, getattr(product, n + "_curve"))
                 for n in ("sn", "hopf", "hom")]
        named = [(n, pts) for n, pts in named if pts]
        frame, elems = _curves(named)
        bq, bc = product.bt_point
        elems.append(f'<circle cx="{frame.x(bq):.2f}" cy="{frame.y(bc):.2f}" '
                     f'r="3" fill="#000000"/>')
        return _document(elems)
    if isinstance(product, BasinRaster):
        g = product.grid
        us = np.linspace(g.u_lo, g.u_hi, g.n_u)
        vs = np.linspace(g.v_lo, g.v_hi, g.n_v)
        frame = _Frame(us, vs)
        w = frame.span / max(g.n_u - 1, 1)
        h = frame.span / max(g.n_v - 1, 1)
        elems = []
        for i in range(g.n_u):
            for j in range(g.n_v):
                color = _LABEL_COLORS.get(product.labels[i, j].name,
                                          "#ff00ff")
                elems.append(
                    f'<rect x="{frame.x(us[i]) - w / 2:.2f}" '
                    f'y="{frame.y(vs[j]) - h / 2:.2f}" '
                    f'width="{w:.2f}" height="{h:.2f}" fill="{color}"/>')
        return _document(elems)
    if isinstance(product, Table) and len(product.columns) >= 2:
        pts = [(r[0], r[1]) for r in product.rows
               if isinstance(r[0], (int, float))
               and isinstance(r[1], (int, float))]
        if pts:
            _, elems = _curves([("table", pts)])
            return _document(elems)
    raise TypeError(f"no SVG view for {type(product).__name__}")
