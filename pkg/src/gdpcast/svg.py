"""Minimal static SVG charts.

Every panel maps data to screen coordinates with a known affine transform,
``X = ax + bx * x`` and ``Y = ay + by * y``, stored as ``data-*`` attributes
on the panel group so plotted values can be recovered from the file.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape, quoteattr

import numpy as np

PALETTE = {"observed": "#222222", "hw": "#1f77b4", "sarima": "#2ca02c", "dlm": "#d62728",
           "band": "#d62728", "mean": "#ff7f0e", "grid": "#dddddd"}


def _num(v: float) -> str:
    return repr(float(v))


def nice_ticks(lo: float, hi: float, target: int = 5) -> np.ndarray:
    """Round tick positions covering ``[lo, hi]``."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step * 1e-9, step)


@dataclass
class Panel:
    """One plotting area with its own data-to-screen transform."""

    left: float
    top: float
    width: float
    height: float
    xlim: tuple
    ylim: tuple
    title: str = ""
    items: list = field(default_factory=list)

    def __post_init__(self):
        (x0, x1), (y0, y1) = self.xlim, self.ylim
        if x1 <= x0:
            x1 = x0 + 1.0
        if y1 <= y0:
            pad = max(abs(y0), 1.0) * 0.05
            y0, y1 = y0 - pad, y1 + pad
        self.xlim, self.ylim = (float(x0), float(x1)), (float(y0), float(y1))
        self.bx = self.width / (x1 - x0)
        self.ax = self.left - self.bx * x0
        self.by = -self.height / (y1 - y0)
        self.ay = self.top - self.by * y1

    def X(self, x):
        return self.ax + self.bx * np.asarray(x, dtype=float)

    def Y(self, y):
        return self.ay + self.by * np.asarray(y, dtype=float)

    def _points(self, x, y) -> str:
        return " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(self.X(x), self.Y(y)))

    def line(self, x, y, color, ident="", width=1.5, dash=""):
        extra = f' id="{ident}"' if ident else ""
        extra += f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline{extra} fill="none" stroke="{color}" '
                          f'stroke-width="{width}" points="{self._points(x, y)}"/>')

    def band(self, x, lower, upper, color, ident="band"):
        """Closed ribbon: upper bound left to right, then lower bound back."""
        x = np.asarray(x, dtype=float)
        xs = np.r_[x, x[::-1]]
        ys = np.r_[np.asarray(upper, float), np.asarray(lower, float)[::-1]]
        self.items.append(f'<polygon id="{ident}" fill="{color}" fill-opacity="0.15" '
                          f'stroke="none" points="{self._points(xs, ys)}"/>')

    def markers(self, x, y, color, ident="", r=1.8):
        group = [f'<g id="{ident}" fill="none" stroke="{color}">' if ident else
                 f'<g fill="none" stroke="{color}">']
        for a, b in zip(self.X(x), self.Y(y)):
            group.append(f'<circle cx="{_num(a)}" cy="{_num(b)}" r="{r}"/>')
        group.append("</g>")
        self.items.append("".join(group))

    def stems(self, x, y, color):
        y0 = float(self.Y(0.0))
        for a, b in zip(self.X(x), self.Y(y)):
            self.items.append(f'<line x1="{_num(a)}" y1="{_num(y0)}" x2="{_num(a)}" '
                              f'y2="{_num(b)}" stroke="{color}" stroke-width="2"/>')

    def hline(self, y, color, dash="4,3"):
        yy = float(self.Y(y))
        self.items.append(f'<line x1="{_num(self.left)}" y1="{_num(yy)}" '
                          f'x2="{_num(self.left + self.width)}" y2="{_num(yy)}" '
                          f'stroke="{color}" stroke-dasharray="{dash}"/>')

    def vline(self, x, color, dash="4,3"):
        xx = float(self.X(x))
        self.items.append(f'<line x1="{_num(xx)}" y1="{_num(self.top)}" x2="{_num(xx)}" '
                          f'y2="{_num(self.top + self.height)}" stroke="{color}" '
                          f'stroke-dasharray="{dash}"/>')

    def render(self, ident: str) -> str:
        out = [f'<g id={quoteattr(ident)} class="panel" data-ax="{_num(self.ax)}" '
               f'data-bx="{_num(self.bx)}" data-ay="{_num(self.ay)}" '
               f'data-by="{_num(self.by)}">']
        out.append(f'<rect x="{self.left}" y="{self.top}" width="{self.width}" '
                   f'height="{self.height}" fill="white" stroke="#888888"/>')
        for t in nice_ticks(*self.ylim):
            yy = float(self.Y(t))
            out.append(f'<line x1="{self.left}" y1="{_num(yy)}" x2="{self.left + self.width}" '
                       f'y2="{_num(yy)}" stroke="{PALETTE["grid"]}"/>')
            out.append(f'<text x="{self.left - 4}" y="{_num(yy + 3)}" font-size="9" '
                       f'text-anchor="end">{t:g}</text>')
        for t in nice_ticks(*self.xlim):
            xx = float(self.X(t))
            out.append(f'<text x="{_num(xx)}" y="{self.top + self.height + 12}" font-size="9" '
                       f'text-anchor="middle">{t:g}</text>')
        if self.title:
            out.append(f'<text x="{self.left}" y="{self.top - 6}" font-size="11">'
                       f'{escape(self.title)}</text>')
        out.extend(self.items)
        out.append("</g>")
        return "\n".join(out)


def document(panels: dict, width: int, height: int, title: str = "",
             legend: tuple = ()) -> str:
    """Assemble panels (id -> Panel) and an optional ``(label, color)`` legend."""
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    if title:
        out.append(f"<title>{escape(title)}</title>")
        out.append(f'<text x="{width / 2}" y="16" font-size="13" text-anchor="middle">'
                   f'{escape(title)}</text>')
    for ident, panel in panels.items():
        out.append(panel.render(ident))
    for i, (label, color) in enumerate(legend):
        y = 30 + 14 * i
        out.append(f'<rect x="{width - 130}" y="{y - 8}" width="10" height="10" '
                   f'fill="{color}"/>')
        out.append(f'<text x="{width - 115}" y="{y + 1}" font-size="10">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def inverse_points(points: str, ax: float, bx: float, ay: float, by: float) -> np.ndarray:
    """Data coordinates of an SVG ``points`` attribute under the panel transform."""
    pairs = np.array([[float(v) for v in p.split(",")] for p in points.split()])
    return np.column_stack([(pairs[:, 0] - ax) / bx, (pairs[:, 1] - ay) / by])
