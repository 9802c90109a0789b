"""Predicted limit of the solution cloud and comparison against simulations.

Off ``B`` the limit copies ``mu`` restricted to ``A``.  On a smooth curve of
``B`` the solutions are spread with line density

    rho(t) = |d/dt  int arg(gamma(t) - x) dmu(x)| / (2 pi) = |Im(gamma'(t) C(gamma(t)))| / (2 pi),

that is, consecutive solutions are separated by one full turn of the
averaged argument.  On a level set of ``U`` the tangent is orthogonal to the
gradient, so ``rho = |grad U| / (2 pi)``, and ``int rho dl`` over a closed
curve is the enclosed mass by Gauss' theorem.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

from .measures import (
    EmpiricalUniform,
    MeasureSpec,
    PointMass,
    RadialDensity,
    TruncatedRadialGaussian,
    UniformCircle,
    region_mass,
)
from .regions import GridConfig, LevelSetCurve, LevelSetTrace, _auto_bounds, trace

__all__ = [
    "SingularVertex",
    "PredictedLimitMeasure",
    "CompareConfig",
    "ComparisonReport",
    "argument_derivative",
    "density_on_curve",
    "argument_increment",
    "argument_derivative_fd",
    "predicted_measure",
    "sample_predicted",
    "project_to_curve",
    "compare",
    "write_histogram_csv",
]

TWO_PI = 2.0 * math.pi


class SingularVertex(ArithmeticError):
    def __init__(self, message: str, indices):
        super().__init__(message)
        self.indices = np.asarray(indices)


# ---------------------------------------------------------------------------
# density on a curve
# ---------------------------------------------------------------------------


def argument_derivative(measure: MeasureSpec, curve: LevelSetCurve) -> np.ndarray:
    """Signed ``Im(T * C)`` at each vertex, ``T`` the unit tangent.

    Endpoints on a circle component use the one-sided gradient stored on the curve.
    """
    t = curve.tangents
    if curve.gradients is not None:
        c = np.conj(curve.gradients)
    else:
        c = measure.cauchy(curve.vertices)
    return (t * c).imag


def density_on_curve(measure: MeasureSpec, curve: LevelSetCurve,
                     singular_tol: float = 1e-6) -> np.ndarray:
    d = np.abs(argument_derivative(measure, curve))
    bad = np.flatnonzero(~(d >= singular_tol))
    if bad.size:
        raise SingularVertex(f"argument derivative below {singular_tol:g} at {bad.size} vertices",
                             bad)
    return d / TWO_PI


# -- quadrature oracle -------------------------------------------------------


def _arg_ratio(z1, z0, x):
    return np.angle((z1 - x) / (z0 - x))


def _circle_increment(comp: UniformCircle, z0, z1):
    c, r = comp.center, comp.radius

    def f(theta):
        return float(_arg_ratio(z1, z0, c + r * complex(math.cos(theta), math.sin(theta))))

    # break the range at the angles of the endpoints, where the integrand is sharpest
    a0 = math.atan2((z0 - c).imag, (z0 - c).real) % TWO_PI
    pts = sorted({a0, (a0 + math.pi) % TWO_PI})
    val, _ = integrate.quad(f, 0.0, TWO_PI, points=pts, limit=400, epsabs=1e-14, epsrel=1e-13)
    return val / TWO_PI


def _radial_mass_density(comp, r):
    if isinstance(comp, RadialDensity):
        return TWO_PI * r * np.interp(r, comp.r, comp.phi, left=0.0, right=0.0)
    s2 = comp.sigma ** 2
    return np.where(r <= comp.cutoff, r * np.exp(-r * r / (2 * s2)) / s2, 0.0) / comp._norm


def _radial_increment(comp, z0, z1):
    c = comp.center
    lo, hi = (comp.r[0], comp.r[-1]) if isinstance(comp, RadialDensity) else (0.0, comp.cutoff)

    def ring(r):
        if r == 0:
            return float(_arg_ratio(z1, z0, c))
        g = lambda th: float(_arg_ratio(z1, z0, c + r * complex(math.cos(th), math.sin(th))))
        v, _ = integrate.quad(g, 0.0, TWO_PI, limit=200, epsabs=1e-13, epsrel=1e-12)
        return float(_radial_mass_density(comp, np.array(r))) * v / TWO_PI

    brk = [abs(z0 - c), abs(z1 - c)]
    if isinstance(comp, RadialDensity):
        brk += list(comp.r)
    brk = sorted(b for b in set(brk) if lo < b < hi)
    val, _ = integrate.quad(ring, lo, hi, points=brk or None, limit=200, epsabs=1e-13, epsrel=1e-12)
    return val


def argument_increment(measure: MeasureSpec, z0: complex, z1: complex) -> float:
    """``int [arg(z1 - x) - arg(z0 - x)] dmu(x)`` by direct quadrature.

    Each difference is the principal argument of ``(z1 - x)/(z0 - x)``, which
    tracks the branch correctly for short steps.
    """
    total = 0.0
    for comp, w in zip(measure.components, measure.weights):
        if isinstance(comp, UniformCircle):
            v = _circle_increment(comp, z0, z1)
        elif isinstance(comp, PointMass):
            v = float(_arg_ratio(z1, z0, comp.location))
        elif isinstance(comp, EmpiricalUniform):
            v = float(np.mean(_arg_ratio(z1, z0, np.asarray(comp.atoms))))
        elif isinstance(comp, (RadialDensity, TruncatedRadialGaussian)):
            v = _radial_increment(comp, z0, z1)
        else:  # pragma: no cover
            raise TypeError(f"no quadrature for {type(comp).__name__}")
        total += w * v
    return total


def argument_derivative_fd(measure: MeasureSpec, z: complex, tangent: complex,
                           h: float = 1e-4) -> float:
    """Fourth-order central difference of the argument integral along ``tangent``."""
    t = tangent / abs(tangent)
    inc = lambda k: argument_increment(measure, z, z + k * h * t)
    return (8 * (inc(1) - inc(-1)) - (inc(2) - inc(-2))) / (12 * h)


# ---------------------------------------------------------------------------
# predicted measure
# ---------------------------------------------------------------------------


@dataclass
class PredictedLimitMeasure:
    measure: MeasureSpec
    curves: list
    curve_mass: float
    a_mass: float
    a_mass_se: float
    flat_regions: list = field(default_factory=list)
    isolated_origin: bool = False
    reference_potential: float = 0.0

    def in_A(self, z, eps: float = 1e-9) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.measure.potential(z) - self.reference_potential > eps

    def curve_masses(self) -> np.ndarray:
        return np.array([_curve_mass(c) for c in self.curves])


def _curve_mass(curve: LevelSetCurve) -> float:
    seg = curve.segment_lengths()
    d = curve.density
    dd = np.r_[d, d[:1]] if curve.closed else d
    return float(np.sum(0.5 * (dd[:-1] + dd[1:]) * seg))


def predicted_measure(measure: MeasureSpec, traced: LevelSetTrace | None = None,
                      grid: GridConfig | None = None, rng_seed: int = 0,
                      samples: int = 200_000) -> PredictedLimitMeasure:
    """Assemble the limit: ``mu`` on ``A`` plus the density-weighted curves of ``B``."""
    tr = traced if traced is not None else trace(measure, grid)
    if tr.flat_regions:
        warnings.warn("B contains a two-dimensional region; no mass law is predicted there",
                      RuntimeWarning, stacklevel=2)
    curves = []
    for cv in tr.curves:
        cv.density = density_on_curve(measure, cv)
        curves.append(cv)
    u0 = tr.reference_potential

    def in_a(z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return measure.potential(z) - u0 > 1e-9

    a_mass, se = region_mass(measure, in_a, rng_seed, samples)
    cm = float(sum(_curve_mass(c) for c in curves))
    return PredictedLimitMeasure(measure, curves, cm, a_mass, se, list(tr.flat_regions),
                                 tr.isolated_origin, u0)


def _sample_curves(curves, rng, count):
    if count == 0 or not curves:
        return np.empty(0, complex)
    starts, ends, masses = [], [], []
    for cv in curves:
        v = cv.vertices
        p = np.r_[v, v[:1]] if cv.closed else v
        d = np.r_[cv.density, cv.density[:1]] if cv.closed else cv.density
        seg = cv.segment_lengths()
        starts.append(p[:-1])
        ends.append(p[1:])
        masses.append(0.5 * (d[:-1] + d[1:]) * seg)
    a, b, m = np.concatenate(starts), np.concatenate(ends), np.concatenate(masses)
    k = rng.choice(m.size, size=count, p=m / m.sum())
    s = rng.uniform(0, 1, count)
    return a[k] + s * (b[k] - a[k])


def sample_predicted(pred: PredictedLimitMeasure, rng_seed: int, count: int) -> np.ndarray:
    """Draw from the predicted limit (used as a synthetic ground truth)."""
    rng = np.random.default_rng(rng_seed)
    total = pred.a_mass + pred.curve_mass
    n_a = int(rng.binomial(count, pred.a_mass / total)) if total > 0 else 0
    out = []
    need = n_a
    while need > 0:
        z = pred.measure.sample(rng, max(2 * need, 1000))
        z = z[pred.in_A(z)][:need]
        if z.size == 0 and pred.a_mass <= 0:
            break
        out.append(z)
        need -= z.size
    out.append(_sample_curves(pred.curves, rng, count - n_a))
    z = np.concatenate(out)
    return z[rng.permutation(z.size)]


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompareConfig:
    tube_radius: float = 0.05
    hist_cell: float = 0.1
    reference_samples: int = 1_000_000
    support_spacing: float | None = None        # default tube_radius / 10
    exclude_origin_gaps: bool = True
    spacing_components: tuple | None = None     # indices into predicted.curves; None = all
    drop_origin_solution: bool = False
    rng_seed: int = 12345


@dataclass
class ComparisonReport:
    mass_fraction_near_A_support: float
    mass_fraction_near_B: float
    mass_fraction_near_support: float
    histogram_distance: float
    spacing_normalized_gaps: list
    bubble_radius: float
    solution_count: int
    tube_radius: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spacing_normalized_gaps"] = [float(g) for g in self.spacing_normalized_gaps]
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in d.items()}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text


def _segment_distance(z, a, b):
    """Distance from each point in ``z`` to the nearest of the segments ``a[i]b[i]``."""
    out = np.full(z.shape, np.inf)
    which = np.full(z.shape, -1, dtype=int)
    ab = b - a
    L2 = np.abs(ab) ** 2
    L2 = np.where(L2 > 0, L2, 1.0)
    step = max(1, (1 << 22) // max(a.size, 1))
    for i in range(0, z.size, step):
        zz = z[i:i + step, None]
        s = np.clip(((zz - a) * np.conj(ab)).real / L2, 0.0, 1.0)
        d = np.abs(zz - (a + s * ab))
        k = d.argmin(axis=1)
        out[i:i + step] = d[np.arange(d.shape[0]), k]
        which[i:i + step] = k
    return out, which


def _curve_segments(curve):
    v = curve.vertices
    p = np.r_[v, v[:1]] if curve.closed else v
    return p[:-1], p[1:]


def _circumcenter(a, b, c):
    """Center of the circle through three points; ``nan`` if collinear."""
    ba, ca = b - a, c - a
    den = 2 * (ba.conjugate() * ca).imag
    with np.errstate(divide="ignore", invalid="ignore"):
        return a + 1j * (ba * abs(ca) ** 2 - ca * abs(ba) ** 2) / den


def project_to_curve(curve: LevelSetCurve, z: np.ndarray):
    """Arclength coordinate and distance of points relative to ``curve``.

    The nearest segment is read as an arc of the circle through it and a
    neighbouring vertex, and points are projected radially onto that arc, which
    is exact when the curve is a circle.
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    v = curve.vertices
    m = len(v)
    a, b = _curve_segments(curve)
    dist, k = _segment_distance(z, a, b)
    seg = curve.segment_lengths()
    cum = np.r_[0.0, np.cumsum(seg)]
    t = np.empty(z.size)
    for j in range(z.size):
        i = int(k[j])
        p0, p1 = a[i], b[i]
        if curve.closed:
            nb = v[(i + 2) % m] if m > 2 else None
        else:
            nb = v[i + 2] if i + 2 < m else (v[i - 1] if i >= 1 else None)
        frac = None
        if nb is not None:
            c = _circumcenter(p0, p1, nb)
            if np.isfinite(c) and abs(c - p0) < 1e6 * abs(p1 - p0):
                th = np.angle((p1 - c) / (p0 - c))
                ph = np.angle((z[j] - c) / (p0 - c))
                if th != 0:
                    frac = ph / th
        if frac is None:
            ab = p1 - p0
            frac = ((z[j] - p0) * np.conj(ab)).real / abs(ab) ** 2
        frac = min(max(frac, 0.0), 1.0)
        t[j] = cum[i] + frac * seg[i]
    return t, dist


def _density_at(curve, t):
    seg = curve.segment_lengths()
    cum = np.r_[0.0, np.cumsum(seg)]
    d = np.r_[curve.density, curve.density[:1]] if curve.closed else curve.density
    return np.interp(t, cum[: d.size], d)


def _normalized_gaps(curve, sol_z, is_origin, n, exclude_origin):
    t, _ = project_to_curve(curve, sol_z)
    order = np.argsort(t, kind="stable")
    t, orig = t[order], is_origin[order]
    if t.size < 2:
        return np.empty(0)
    gaps = np.diff(t)
    mids = 0.5 * (t[:-1] + t[1:])
    touch = orig[:-1] | orig[1:]
    if curve.closed:
        L = curve.length
        gaps = np.r_[gaps, L - t[-1] + t[0]]
        mids = np.r_[mids, (0.5 * (t[-1] + t[0] + L)) % L]
        touch = np.r_[touch, orig[-1] | orig[0]]
    g = gaps * n * _density_at(curve, mids)
    if exclude_origin:
        g = g[~touch]
    return g


def _as_solution_arrays(empirical):
    out = []
    for s in empirical:
        if hasattr(s, "solutions"):
            z = np.asarray(s.solutions, dtype=complex)
            orig = np.array([str(getattr(p, "value", p)) == "OriginSeed"
                             for p in s.seed_provenance], dtype=bool)
        else:
            z = np.asarray(s, dtype=complex).reshape(-1)
            orig = z == 0
        out.append((z, orig))
    return out


def _hist_edges(pred: PredictedLimitMeasure, cell: float):
    x0, x1, y0, y1 = _auto_bounds(pred.measure, pred.reference_potential, cell)
    xe = cell * np.arange(math.floor(x0 / cell) - 1, math.ceil(x1 / cell) + 2)
    ye = cell * np.arange(math.floor(y0 / cell) - 1, math.ceil(y1 / cell) + 2)
    return xe, ye


def _hist(z, xe, ye):
    h, _, _ = np.histogram2d(z.real, z.imag, bins=(xe, ye))
    return h


def predicted_histogram(pred: PredictedLimitMeasure, cell: float = 0.1,
                        reference_samples: int = 1_000_000, rng_seed: int = 12345):
    """Bin masses of the prediction on a fixed grid: Monte Carlo for the ``A`` part,
    fine subdivision of the curves for the rest."""
    xe, ye = _hist_edges(pred, cell)
    rng = np.random.default_rng(rng_seed)
    h = np.zeros((xe.size - 1, ye.size - 1))
    if pred.a_mass > 0:
        z = pred.measure.sample(rng, reference_samples)
        keep = pred.in_A(z)
        h += _hist(z[keep], xe, ye) / reference_samples
    for cv in pred.curves:
        a, b = _curve_segments(cv)
        d = np.r_[cv.density, cv.density[:1]] if cv.closed else cv.density
        mass = 0.5 * (d[:-1] + d[1:]) * cv.segment_lengths()
        k = 16
        s = (np.arange(k) + 0.5) / k
        pts = (a[:, None] + s[None, :] * (b - a)[:, None]).ravel()
        w = np.repeat(mass / k, k)
        hh, _, _ = np.histogram2d(pts.real, pts.imag, bins=(xe, ye), weights=w)
        h += hh
    return h, xe, ye


def compare(empirical, predicted: PredictedLimitMeasure,
            config: CompareConfig | None = None) -> ComparisonReport:
    """Tube mass fractions, histogram L1 distance, spacing gaps and bubble radius.

    ``empirical`` is a list of :class:`~randpoly.shifted_solver.SolutionSet`
    (or plain complex arrays, one per trial).
    """
    cfg = config or CompareConfig()
    trials = _as_solution_arrays(empirical)
    if not trials:
        raise ValueError("need at least one trial")
    r = cfg.tube_radius

    pooled = np.concatenate([z if not cfg.drop_origin_solution else z[~o] for z, o in trials])

    # distance to the part of the support lying in A
    spacing = cfg.support_spacing or r / 10
    sp = predicted.measure.support_points(spacing)
    sp = sp[predicted.in_A(sp, eps=0.0)] if sp.size else sp
    if sp.size:
        tree = cKDTree(np.c_[sp.real, sp.imag])
        dA, _ = tree.query(np.c_[pooled.real, pooled.imag])
    else:
        dA = np.full(pooled.shape, np.inf)
    dB = np.full(pooled.shape, np.inf)
    for cv in predicted.curves:
        a, b = _curve_segments(cv)
        dB = np.minimum(dB, _segment_distance(pooled, a, b)[0])
    nearA, nearB = dA <= r, dB <= r
    N = max(pooled.size, 1)

    href, xe, ye = predicted_histogram(predicted, cfg.hist_cell, cfg.reference_samples, cfg.rng_seed)
    href = href / max(href.sum(), 1e-300)
    hemp = _hist(pooled, xe, ye)
    inside = hemp.sum()
    hemp = hemp / N
    hdist = float(np.abs(hemp - href).sum() + (N - inside) / N)

    gaps = []
    comp_idx = (range(len(predicted.curves)) if cfg.spacing_components is None
                else cfg.spacing_components)
    for z, orig in trials:
        n = z.size
        if not predicted.curves or n == 0:
            continue
        dists = np.stack([_segment_distance(z, *_curve_segments(cv))[0] for cv in predicted.curves])
        nearest = dists.argmin(axis=0)
        for ci in comp_idx:
            cv = predicted.curves[ci]
            sel = (nearest == ci) & (dists[ci] <= r)
            if sel.sum() >= 2:
                gaps.append(_normalized_gaps(cv, z[sel], orig[sel], n, cfg.exclude_origin_gaps))
    gaps = np.concatenate(gaps) if gaps else np.empty(0)

    radii = []
    for z, orig in trials:
        nz = z[~orig & (z != 0)]
        if nz.size:
            radii.append(float(np.abs(nz).min()))
    bubble = float(min(radii)) if radii else math.inf

    return ComparisonReport(
        mass_fraction_near_A_support=float(nearA.mean()) if pooled.size else 0.0,
        mass_fraction_near_B=float(nearB.mean()) if pooled.size else 0.0,
        mass_fraction_near_support=float((nearA | nearB).mean()) if pooled.size else 0.0,
        histogram_distance=hdist,
        spacing_normalized_gaps=gaps.tolist(),
        bubble_radius=bubble,
        solution_count=int(pooled.size),
        tube_radius=r,
    )


def write_histogram_csv(path, hist, xe, ye) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x_lo", "x_hi", "y_lo", "y_hi", "mass"])
        for i in range(hist.shape[0]):
            for j in range(hist.shape[1]):
                if hist[i, j]:
                    w.writerow([repr(float(xe[i])), repr(float(xe[i + 1])), repr(float(ye[j])),
                                repr(float(ye[j + 1])), repr(float(hist[i, j]))])
