"""Minimal dependency-free SVG figures (line charts and workspace sketches).

Deliberately tiny: enough primitives to render run traces as diffable
vector files without pulling in a plotting stack.
"""

from __future__ import annotations

import numpy as np


class SvgCanvas:
    def __init__(self, width: int = 640, height: int = 420):
        self.width = width
        self.height = height
        self._parts: list[str] = []

    def line(self, x1, y1, x2, y2, color="#444", width=1.0, dash=None, cls=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        extra += f' class="{cls}"' if cls else ""
        self._parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width}"{extra} />')

    def polyline(self, pts, color="#1f77b4", width=1.5, cls=None):
        if len(pts) < 2:
            return
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        extra = f' class="{cls}"' if cls else ""
        self._parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{extra} />')

    def circle(self, cx, cy, r, color="#d62728", fill="none", width=1.0, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self._parts.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" fill="{fill}" '
            f'stroke="{color}" stroke-width="{width}"{extra} />')

    def rect(self, x, y, w, h, color="#9467bd", fill="none", width=1.0, cls=None):
        extra = f' class="{cls}"' if cls else ""
        self._parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
            f'fill="{fill}" stroke="{color}" stroke-width="{width}"{extra} />')

    def text(self, x, y, s, size=11, color="#222", anchor="start"):
        s = (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
        self._parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" fill="{color}" '
            f'text-anchor="{anchor}" font-family="sans-serif">{s}</text>')

    def to_string(self) -> str:
        body = "\n".join(self._parts)
        return ('<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'{body}\n</svg>\n')

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_string())


class Frame:
    """Maps data coordinates into a pixel rectangle (y up)."""

    def __init__(self, canvas: SvgCanvas, xlim, ylim, pad=45, rect=None):
        self.canvas = canvas
        self.x0, self.x1 = float(xlim[0]), float(xlim[1])
        self.y0, self.y1 = float(ylim[0]), float(ylim[1])
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        if rect is None:
            rect = (pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad)
        self.left, self.top, self.w, self.h = rect

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return self.top + self.h - (y - self.y0) / (self.y1 - self.y0) * self.h

    def pt(self, xy):
        return (self.px(xy[0]), self.py(xy[1]))

    def axes(self, title="", xlabel="", ylabel=""):
        c = self.canvas
        c.rect(self.left, self.top, self.w, self.h, color="#888", width=0.8)
        if title:
            c.text(self.left + self.w / 2, self.top - 14, title, size=13, anchor="middle")
        if xlabel:
            c.text(self.left + self.w / 2, self.top + self.h + 32, xlabel, anchor="middle")
        if ylabel:
            c.text(max(12, self.left - 33), self.top - 8, ylabel)
        for frac in (0.0, 0.5, 1.0):
            xv = self.x0 + frac * (self.x1 - self.x0)
            yv = self.y0 + frac * (self.y1 - self.y0)
            c.text(self.px(xv), self.top + self.h + 16, f"{xv:.4g}", size=9, anchor="middle")
            c.text(self.left - 6, self.py(yv) + 3, f"{yv:.4g}", size=9, anchor="end")

    def series(self, xs, ys, color, width=1.5, cls=None):
        pts = [(self.px(x), self.py(y)) for x, y in zip(xs, ys)]
        self.canvas.polyline(pts, color=color, width=width, cls=cls)

    def hline(self, y, color="#d62728", dash="5,4", label=None):
        self.canvas.line(self.px(self.x0), self.py(y), self.px(self.x1), self.py(y),
                         color=color, width=1.0, dash=dash)
        if label:
            self.canvas.text(self.px(self.x1) - 4, self.py(y) - 4, label,
                             size=9, color=color, anchor="end")


def frame_legend(frame: Frame, entries):
    """entries: list of (label, color) drawn inside the frame's top-left."""
    for idx, (label, color) in enumerate(entries):
        frame.canvas.text(frame.left + 6, frame.top + 14 + 13 * idx, label,
                          size=10, color=color)


def line_chart(series, title="", xlabel="", ylabel="", hline=None,
               hline_label=None, size=(640, 420)) -> str:
    """series: list of (xs, ys, color, label). Returns SVG text."""
    canvas = SvgCanvas(*size)
    xs_all = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    if hline is not None:
        ys_all = np.append(ys_all, hline)
    ylo, yhi = float(ys_all.min()), float(ys_all.max())
    span = max(yhi - ylo, 1e-12)
    frame = Frame(canvas, (xs_all.min(), xs_all.max()), (ylo - 0.05 * span, yhi + 0.05 * span))
    frame.axes(title=title, xlabel=xlabel, ylabel=ylabel)
    for xs, ys, color, label in series:
        frame.series(xs, ys, color, cls=f"series-{label}")
    frame_legend(frame, [(label, color) for _, _, color, label in series])
    if hline is not None:
        frame.hline(hline, label=hline_label)
    return canvas.to_string()
