"""Minimal SVG 1.1 figures: scatter points, polylines, rings, labels and axis ticks."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

__all__ = ["Figure", "nice_ticks", "ramp_color"]

_RAMP = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)]


def ramp_color(t: float) -> str:
    """Five-stop dark-blue to yellow ramp, ``t`` in [0, 1]."""
    t = min(max(float(t), 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    f = t - i
    a, b = _RAMP[i], _RAMP[i + 1]
    return "#%02x%02x%02x" % tuple(round(a[k] + f * (b[k] - a[k])) for k in range(3))


def nice_ticks(lo: float, hi: float, target: int = 6) -> list:
    span = hi - lo
    if not span > 0:
        return [lo]
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [round(start + k * step, 10) for k in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


class Figure:
    """Equal-aspect plot of a rectangle of the complex plane."""

    def __init__(self, bounds, width: int = 640, title: str = "", margin: int = 50):
        x0, x1, y0, y1 = map(float, bounds)
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.margin = margin
        self.scale = (width - 2 * margin) / (x1 - x0)
        self.width = width
        self.height = int(round((y1 - y0) * self.scale + 2 * margin))
        self.root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", version="1.1",
                               width=str(self.width), height=str(self.height),
                               viewBox=f"0 0 {self.width} {self.height}")
        ET.SubElement(self.root, "rect", x="0", y="0", width=str(self.width),
                      height=str(self.height), fill="white")
        if title:
            t = ET.SubElement(self.root, "text", x=str(self.width / 2), y=str(margin / 2),
                              **{"text-anchor": "middle", "font-size": "14",
                                 "font-family": "sans-serif"})
            t.text = title
        self._axes()

    def px(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.margin + (z.real - self.x0) * self.scale,
                self.margin + (self.y1 - z.imag) * self.scale)

    def _axes(self):
        m, s = self.margin, self.scale
        g = ET.SubElement(self.root, "g", {"class": "axes", "stroke": "#444",
                                           "font-size": "10", "font-family": "sans-serif"})
        w, h = (self.x1 - self.x0) * s, (self.y1 - self.y0) * s
        ET.SubElement(g, "rect", x=str(m), y=str(m), width=f"{w:.2f}", height=f"{h:.2f}",
                      fill="none")
        for v in nice_ticks(self.x0, self.x1):
            x = m + (v - self.x0) * s
            ET.SubElement(g, "line", x1=f"{x:.2f}", x2=f"{x:.2f}", y1=f"{m + h:.2f}",
                          y2=f"{m + h + 5:.2f}")
            t = ET.SubElement(g, "text", x=f"{x:.2f}", y=f"{m + h + 17:.2f}", stroke="none",
                              **{"text-anchor": "middle"})
            t.text = _fmt(v)
        for v in nice_ticks(self.y0, self.y1):
            y = m + (self.y1 - v) * s
            ET.SubElement(g, "line", x1=f"{m - 5:.2f}", x2=f"{m:.2f}", y1=f"{y:.2f}",
                          y2=f"{y:.2f}")
            t = ET.SubElement(g, "text", x=f"{m - 8:.2f}", y=f"{y + 3:.2f}", stroke="none",
                              **{"text-anchor": "end"})
            t.text = _fmt(v)

    def scatter(self, points, color="#1f77b4", radius=1.5, cls="scatter"):
        g = ET.SubElement(self.root, "g", {"class": cls, "fill": color})
        xs, ys = self.px(np.ravel(points))
        for x, y in zip(np.atleast_1d(xs), np.atleast_1d(ys)):
            ET.SubElement(g, "circle", cx=f"{x:.2f}", cy=f"{y:.2f}", r=str(radius))
        return g

    def polyline(self, points, color="#d62728", width=1.5, closed=False, cls="curve", dash=None):
        xs, ys = self.px(np.ravel(points))
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        attrs = {"class": cls, "points": pts, "fill": "none", "stroke": color,
                 "stroke-width": str(width)}
        if dash:
            attrs["stroke-dasharray"] = dash
        return ET.SubElement(self.root, "polygon" if closed else "polyline", attrs)

    def ring(self, center, radius, color="#555", width=1.0, dash="4,3", cls="ring"):
        x, y = self.px(complex(center))
        return ET.SubElement(self.root, "circle", {"class": cls, "cx": f"{float(x):.2f}",
                                                   "cy": f"{float(y):.2f}",
                                                   "r": f"{radius * self.scale:.2f}",
                                                   "fill": "none", "stroke": color,
                                                   "stroke-width": str(width),
                                                   "stroke-dasharray": dash})

    def label(self, z, text, size=11, color="#000"):
        x, y = self.px(complex(z))
        t = ET.SubElement(self.root, "text", x=f"{float(x):.2f}", y=f"{float(y):.2f}",
                          fill=color, **{"font-size": str(size), "font-family": "sans-serif"})
        t.text = text
        return t

    def to_string(self) -> str:
        return ET.tostring(self.root, encoding="unicode")

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text('<?xml version="1.0" encoding="UTF-8"?>\n' + self.to_string() + "\n",
                        encoding="utf-8")
        return path
