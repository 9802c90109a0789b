"""The sets where the potential exceeds, equals, or falls below its origin value.

``A = {U > U(0)}``, ``B = {U = U(0)}`` and ``Omega`` the rest.  The curve part of
``B`` is traced by marching squares on a grid, every vertex is then pulled
onto the exact level set by Newton steps along the gradient, and components
are cut wherever they cross a circle component of the measure (the gradient
jumps there, so each piece is analytic).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.ndimage import label as cc_label
from scipy.optimize import brentq
from skimage.measure import find_contours

from .measures import MeasureSpec, NegativeInfinity

__all__ = [
    "RegionLabel",
    "GridConfig",
    "LevelSetCurve",
    "FlatRegion",
    "LevelSetTrace",
    "EmptyLevelSet",
    "reference_potential",
    "classify",
    "label_array",
    "trace",
    "trace_level_set",
    "write_curves_csv",
    "segment_arclengths",
    "vertex_tangents",
]


class RegionLabel(str, Enum):
    A = "A"
    B = "B"
    OMEGA = "Omega"


class EmptyLevelSet(LookupError):
    """No curve components; ``result`` still carries flat regions and the origin flag."""

    def __init__(self, message: str, result: "LevelSetTrace"):
        super().__init__(message)
        self.result = result


def reference_potential(measure: MeasureSpec) -> float:
    u0 = float(measure.potential(0j))
    if u0 == -math.inf:
        raise NegativeInfinity("the origin is an atom of the measure")
    return u0


def label_array(measure: MeasureSpec, z, eps_band: float = 1e-9, u0: float | None = None):
    """Vectorized labels as an object array of :class:`RegionLabel`."""
    if u0 is None:
        u0 = reference_potential(measure)
    f = measure.potential(z) - u0
    codes = np.where(np.abs(f) <= eps_band, 1, np.where(f > eps_band, 0, 2))
    # np.full would coerce the str-valued enum to plain str
    table = np.empty(3, dtype=object)
    table[0], table[1], table[2] = RegionLabel.A, RegionLabel.B, RegionLabel.OMEGA
    return table[codes]


def classify(measure: MeasureSpec, z: complex, eps_band: float = 1e-9) -> RegionLabel:
    u = float(measure.potential(complex(z)))
    if u == -math.inf:
        raise NegativeInfinity(f"potential is -inf at {z!r}")
    return _label_scalar(u - reference_potential(measure), eps_band)


def _label_scalar(f: float, eps: float) -> RegionLabel:
    if f > eps:
        return RegionLabel.A
    if abs(f) <= eps:
        return RegionLabel.B
    return RegionLabel.OMEGA


# ---------------------------------------------------------------------------
# curve geometry
# ---------------------------------------------------------------------------


def _circumcurvature(a, b, c):
    """Unsigned curvature of the circle through three points (0 if collinear)."""
    l1, l2, l3 = np.abs(b - a), np.abs(c - b), np.abs(c - a)
    cross = np.abs(((b - a).conjugate() * (c - a)).imag)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = 2.0 * cross / (l1 * l2 * l3)
    return np.where(np.isfinite(k), k, 0.0)


def segment_arclengths(v: np.ndarray, closed: bool) -> np.ndarray:
    """Arc length of each polyline segment, treating it as a circular arc.

    Curvature per segment averages the two circles through the segment and one
    neighbour on each side; exact when the vertices lie on a circle.
    """
    pts = np.concatenate([v, v[:1]]) if closed else v
    chord = np.abs(np.diff(pts))
    m = chord.size
    if m == 0:
        return chord
    if closed:
        ext = np.concatenate([v[-1:], v, v[:2]])            # ext[i+1] == v[i]
        k_left = _circumcurvature(ext[:-3], ext[1:-2], ext[2:-1])
        k_right = _circumcurvature(ext[1:-2], ext[2:-1], ext[3:])
        kappa = 0.5 * (k_left + k_right)
    elif len(v) >= 3:
        kv = _circumcurvature(v[:-2], v[1:-1], v[2:])       # at interior vertices
        kappa = np.empty(m)
        kappa[0] = kv[0]
        kappa[-1] = kv[-1]
        if m > 2:
            kappa[1:-1] = 0.5 * (kv[:-1] + kv[1:])
    else:
        kappa = np.zeros(m)
    x = np.clip(0.5 * chord * kappa, 0.0, 1.0)
    small = x < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        arc = np.where(small, chord * (1 + x * x / 6 + 3 * x ** 4 / 40),
                       2.0 * np.arcsin(x) / np.where(kappa > 0, kappa, 1.0))
    return arc


def vertex_tangents(v: np.ndarray, closed: bool) -> np.ndarray:
    """Unit tangents (complex) from three-point circle fits; exact on circles."""
    m = len(v)
    if m < 2:
        return np.ones(m, dtype=complex)
    pts = np.concatenate([v[-1:], v, v[:1]]) if closed else v
    d = np.diff(pts)
    lens = np.abs(d)
    u = d / lens
    t = np.empty(m, dtype=complex)
    if closed:
        tt = u[:-1] * lens[1:] + u[1:] * lens[:-1]
        return tt / np.abs(tt)
    if m == 2:
        return np.full(2, u[0])
    tt = u[:-1] * lens[1:] + u[1:] * lens[:-1]
    t[1:-1] = tt / np.abs(tt)
    # end tangents: reflect the neighbouring tangent through the end chord
    t[0] = u[0] ** 2 * np.conj(t[1])
    t[-1] = u[-1] ** 2 * np.conj(t[-2])
    return t


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------


@dataclass
class LevelSetCurve:
    vertices: np.ndarray
    cum_arclength: np.ndarray
    grad_norm: np.ndarray
    closed: bool
    singular_flags: np.ndarray
    gradients: np.ndarray = field(repr=False, default=None)
    density: np.ndarray | None = field(repr=False, default=None)
    end_junctions: tuple = (False, False)   # endpoints sit on a circle component

    @property
    def length(self) -> float:
        return float(self.segment_lengths().sum()) if len(self.vertices) > 1 else 0.0

    @property
    def tangents(self) -> np.ndarray:
        return vertex_tangents(self.vertices, self.closed)

    def segment_lengths(self) -> np.ndarray:
        return segment_arclengths(self.vertices, self.closed)


@dataclass(frozen=True)
class FlatRegion:
    """Two-dimensional part of ``B`` found on the grid."""

    cell_count: int
    area: float
    centroid: complex
    equivalent_radius: float
    contains_origin: bool


@dataclass
class LevelSetTrace:
    curves: list
    flat_regions: list
    isolated_origin: bool
    reference_potential: float
    grid: "GridConfig"


@dataclass(frozen=True)
class GridConfig:
    cell: float = 0.02
    bounds: tuple | None = None         # (xmin, xmax, ymin, ymax); automatic when None
    refine_tol: float = 1e-12
    accept_tol: float = 1e-9
    singular_tol: float = 1e-6
    flat_eps: float = 1e-9
    max_newton: int = 60


# ---------------------------------------------------------------------------
# tracing
# ---------------------------------------------------------------------------


def _auto_bounds(measure: MeasureSpec, u0: float, cell: float):
    """A box containing every point of ``B``.

    ``U(z) >= log dist(z, supp)`` so ``B`` lies within ``exp(U(0))`` of the support.
    """
    x0, x1, y0, y1 = measure.bbox()
    margin = math.exp(u0) + 2 * cell
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    hx, hy = 0.75 * (x1 - x0), 0.75 * (y1 - y0)
    return (min(x0 - margin, cx - hx), max(x1 + margin, cx + hx),
            min(y0 - margin, cy - hy, -(y1 + margin)), max(y1 + margin, cy + hy, -(y0 - margin)))


def _grid(bounds, cell):
    xmin, xmax, ymin, ymax = bounds
    # y symmetric about the real axis so conjugation-symmetric measures give
    # mirror-symmetric contours; x shifted off-lattice so 0 is never a node
    ny = int(math.ceil(max(abs(ymin), abs(ymax)) / cell))
    ys = cell * np.arange(-ny, ny + 1)
    shift = cell * 0.3819660112501051
    nx0 = int(math.floor((xmin - shift) / cell))
    nx1 = int(math.ceil((xmax - shift) / cell))
    xs = shift + cell * np.arange(nx0, nx1 + 1)
    return xs, ys


def _newton_refine(measure, z, u0, cfg: GridConfig):
    z = z.copy()
    ok = np.zeros(z.size, dtype=bool)
    active = np.arange(z.size)
    cap = 0.5 * cfg.cell
    for _ in range(cfg.max_newton):
        if active.size == 0:
            break
        za = z[active]
        f = measure.potential(za) - u0
        done = np.abs(f) <= cfg.refine_tol
        ok[active[done]] = True
        g = measure.gradient(za)
        g2 = np.abs(g) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f * g / g2
        bad = ~np.isfinite(step)
        step[bad] = 0
        mag = np.abs(step)
        step = np.where(mag > cap, step * cap / np.where(mag > 0, mag, 1), step)
        move = ~done & ~bad
        z[active[move]] = za[move] - step[move]
        active = active[move]
    f = np.abs(measure.potential(z) - u0)
    return z, ok | (f <= cfg.accept_tol)


def _dedupe(v, closed, tol):
    if len(v) < 2:
        return v
    keep = [0]
    for i in range(1, len(v)):
        if abs(v[i] - v[keep[-1]]) > tol:
            keep.append(i)
    v = v[keep]
    if closed and len(v) > 2 and abs(v[-1] - v[0]) <= tol:
        v = v[:-1]
    return v


def _junction(measure, circle, a, b, u0):
    """Point on ``circle`` between polyline vertices ``a`` and ``b`` where ``U = U(0)``."""
    c, r = circle.center, circle.radius
    ta = math.atan2((a - c).imag, (a - c).real)
    tb = ta + float(np.angle((b - c) / (a - c)))

    def h(t):
        return float(measure.potential(c + r * complex(math.cos(t), math.sin(t)))) - u0

    fa, fb = h(ta), h(tb)
    if fa == 0:
        t = ta
    elif fb == 0:
        t = tb
    elif fa * fb < 0:
        t = brentq(h, ta, tb, xtol=1e-15, rtol=1e-15)
    else:
        # crossing not bracketed on the circle: intersect the chord instead
        s = brentq(lambda s: abs(a + s * (b - a) - c) - r, 0.0, 1.0, xtol=1e-15)
        return a + s * (b - a)
    return c + r * complex(math.cos(t), math.sin(t))


def _split_at_circles(measure, v, closed, u0):
    """Cut a polyline where it crosses circle components; returns (vertices, closed, ends)."""
    circles = measure.circles()
    if not circles or len(v) < 2:
        return [(v, closed, (False, False))]
    pts = np.concatenate([v, v[:1]]) if closed else v
    outside = np.stack([np.abs(pts - c.center) > c.radius for c in circles])
    cuts = []            # (segment index, junction point)
    for i in range(len(pts) - 1):
        changed = np.flatnonzero(outside[:, i] != outside[:, i + 1])
        for k in changed:
            cuts.append((i, _junction(measure, circles[k], pts[i], pts[i + 1], u0)))
    if not cuts:
        return [(v, closed, (False, False))]
    pieces = []
    if closed:
        # rotate so the polyline starts just after the first junction
        i0, j0 = cuts[0]
        order = np.r_[np.arange(i0 + 1, len(v)), np.arange(0, i0 + 1)]
        seq = v[order]
        rel = [((i - i0 - 1) % len(v), j) for i, j in cuts[1:]]
        start, cur = j0, 0
        for i, j in rel:
            pieces.append((np.r_[start, seq[cur:i + 1], j], False, (True, True)))
            start, cur = j, i + 1
        pieces.append((np.r_[start, seq[cur:], j0], False, (True, True)))
    else:
        start, cur, first = None, 0, True
        for i, j in cuts:
            head = [] if start is None else [start]
            pieces.append((np.r_[head, v[cur:i + 1], j].astype(complex), False,
                           (not first, True)))
            start, cur, first = j, i + 1, False
        pieces.append((np.r_[start, v[cur:]].astype(complex), False, (True, False)))
    return [p for p in pieces if len(p[0]) >= 2]


def _curve_gradients(measure, v, ends, nudge=1e-8):
    g = measure.gradient(v)
    for idx, flag, nb in ((0, ends[0], 1), (-1, ends[1], -2)):
        if flag and len(v) > 1:
            d = v[nb] - v[idx]
            g[idx] = measure.gradient(v[idx] + nudge * d / abs(d))
    return g


def _orient(v, closed):
    if closed:
        x, y = v.real, v.imag
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        return v if area >= 0 else v[::-1].copy()
    a, b = v[0], v[-1]
    if (b.real, b.imag) < (a.real, a.imag):
        return v[::-1].copy()
    return v


def _make_curve(measure, v, closed, ends, cfg):
    ov = _orient(v, closed)
    if ov is not v and not closed:
        ends = ends[::-1]
    v = ov
    g = _curve_gradients(measure, v, ends)
    gn = np.abs(g)
    seg = segment_arclengths(v, closed)
    cum = np.r_[0.0, np.cumsum(seg[: len(v) - 1])]
    return LevelSetCurve(v, cum, gn, closed, gn < cfg.singular_tol, g, None, tuple(ends))


def _split_at_singular(curve: LevelSetCurve, measure, cfg):
    flags = curve.singular_flags
    if not flags.any() or len(curve.vertices) < 3:
        return [curve]
    v = curve.vertices
    idx = np.flatnonzero(flags)
    if curve.closed:
        k = idx[0]
        v = np.r_[v[k:], v[:k + 1]]
        idx = np.flatnonzero(np.abs(measure.gradient(v)) < cfg.singular_tol)
        bounds = sorted(set(idx.tolist()) | {0, len(v) - 1})
    else:
        bounds = sorted(set(idx.tolist()) | {0, len(v) - 1})
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a >= 1:
            piece = v[a:b + 1]
            ends = (curve.end_junctions[0] if a == 0 and not curve.closed else False,
                    curve.end_junctions[1] if b == len(v) - 1 and not curve.closed else False)
            out.append(_make_curve(measure, piece, False, ends, cfg))
    return out


def trace(measure: MeasureSpec, grid: GridConfig | None = None) -> LevelSetTrace:
    """Trace ``B``: refined curve components plus flat regions and an isolated-origin flag."""
    cfg = grid or GridConfig()
    u0 = reference_potential(measure)
    bounds = cfg.bounds or _auto_bounds(measure, u0, cfg.cell)
    xs, ys = _grid(bounds, cfg.cell)
    Z = xs[None, :] + 1j * ys[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        F = measure.potential(Z) - u0
    F = np.where(np.isfinite(F), F, -50.0)
    F = np.maximum(F, -50.0)

    near_level = np.abs(F) < cfg.flat_eps
    flat = np.zeros_like(near_level)
    flat_regions = []
    if near_level.any():
        lab, nlab = cc_label(near_level)
        sizes = np.bincount(lab.ravel(), minlength=nlab + 1)
        cellarea = cfg.cell ** 2
        for k in range(1, nlab + 1):
            # isolated near-zero nodes are tangencies of a curve, not 2D pieces
            if sizes[k] < 9:
                continue
            sel = lab == k
            flat |= sel
            pts = Z[sel]
            area = int(sizes[k]) * cellarea
            inside0 = bool(np.min(np.abs(pts)) < 1.5 * cfg.cell)
            flat_regions.append(FlatRegion(int(sizes[k]), area, complex(pts.mean()),
                                           math.sqrt(area / math.pi), inside0))

    mask = ~flat
    raw = find_contours(F, 0.0, mask=mask) if mask.any() else []
    curves = []
    for c in raw:
        z = np.interp(c[:, 1], np.arange(xs.size), xs) + 1j * np.interp(c[:, 0], np.arange(ys.size), ys)
        closed = len(z) > 2 and abs(z[0] - z[-1]) < 1e-12
        if closed:
            z = z[:-1]
        zr, ok = _newton_refine(measure, z, u0, cfg)
        zr = zr[ok]
        zr = _dedupe(zr, closed, 1e-3 * cfg.cell)
        if len(zr) < 2 or (closed and len(zr) < 3):
            continue
        for piece, pclosed, ends in _split_at_circles(measure, zr, closed, u0):
            curve = _make_curve(measure, piece, pclosed, ends, cfg)
            curves.extend(_split_at_singular(curve, measure, cfg))
    curves = _sorted_curves(curves)

    # isolated origin: U - U(0) > 0 on a small ring and no curve passes close by
    ring = 0.5 * cfg.cell * np.exp(2j * np.pi * np.arange(16) / 16)
    fr = measure.potential(ring) - u0
    near = any(np.min(np.abs(cv.vertices)) < 2 * cfg.cell for cv in curves)
    in_flat = any(fr_.contains_origin for fr_ in flat_regions)
    isolated = bool(np.all(fr > cfg.flat_eps) and not near and not in_flat)
    return LevelSetTrace(curves, flat_regions, isolated, u0, cfg)


def _sorted_curves(curves):
    def key(cv):
        v = cv.vertices
        c = v.mean()
        return (round(c.real, 9), round(c.imag, 9), len(v))
    return sorted(curves, key=key)


def trace_level_set(measure: MeasureSpec, grid: GridConfig | None = None) -> list:
    """Curve components of ``B``; raises :class:`EmptyLevelSet` when there are none."""
    res = trace(measure, grid)
    if not res.curves:
        what = []
        if res.flat_regions:
            what.append(f"{len(res.flat_regions)} flat region(s)")
        if res.isolated_origin:
            what.append("isolated point at 0")
        detail = "; ".join(what) or "nothing found"
        raise EmptyLevelSet(f"level set has no curve components ({detail})", res)
    return res.curves


def write_curves_csv(path, curves) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["component_id", "vertex_index", "re", "im", "cum_arclength",
                    "grad_norm", "density", "singular_flag"])
        for cid, cv in enumerate(curves):
            dens = cv.density if cv.density is not None else np.full(len(cv.vertices), np.nan)
            for i, z in enumerate(cv.vertices):
                w.writerow([cid, i, repr(float(z.real)), repr(float(z.imag)),
                            repr(float(cv.cum_arclength[i])), repr(float(cv.grad_norm[i])),
                            "" if not np.isfinite(dens[i]) else repr(float(dens[i])),
                            int(bool(cv.singular_flags[i]))])
