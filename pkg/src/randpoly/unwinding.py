"""Blaschke unwinding of a polynomial given by its roots.

Repeat: factor ``f_k = B_k * g_k`` with ``B_k`` the Blaschke product of the
roots inside the unit disk (so ``g_k`` has no roots there), record
``a_k = g_k(0)`` and continue with ``f_{k+1} = g_k - a_k``.  Then

    f = a_0 B_0 + a_1 B_0 B_1 + a_2 B_0 B_1 B_2 + ...

and since every ``f_{k+1}`` vanishes at 0 the degree drops each round, so
the series terminates after at most ``deg f`` layers.  The roots of
``f_{k+1}`` come from the shifted solver, never from expanded coefficients.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .measures import MeasureSpec, PointMass, RadialDensity, TruncatedRadialGaussian, UniformCircle
from .polynomials import LogComplex, ScaledRootedPolynomial, log_eval
from .shifted_solver import NonConvergence, SeedKind, SolverConfig, solve_shifted

__all__ = [
    "UnwindingExpansion",
    "UnwindingFailure",
    "PreconditionError",
    "CorollaryReport",
    "blaschke_reflect",
    "unwind",
    "reconstruct",
    "coefficient_decay",
    "corollary_check",
    "write_error_profile_csv",
]


class UnwindingFailure(NonConvergence):
    def __init__(self, message, layer, partial=None):
        super().__init__(message, partial)
        self.layer = layer


class PreconditionError(ValueError):
    pass


@dataclass
class UnwindingExpansion:
    coefficients: list
    blaschke_layers: list
    step_degrees: list
    exact: bool

    @property
    def layer_count(self) -> int:
        """Subtraction steps ``m`` in ``a_0 .. a_m``; at most the degree."""
        return len(self.coefficients) - 1

    def to_dict(self) -> dict:
        pair = lambda c: [float(complex(c).real), float(complex(c).imag)]
        return {
            "coefficients": [pair(a) for a in self.coefficients],
            "blaschke_layers": [[pair(r) for r in layer] for layer in self.blaschke_layers],
            "step_degrees": [int(d) for d in self.step_degrees],
            "exact": bool(self.exact),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    @classmethod
    def from_dict(cls, doc: dict) -> "UnwindingExpansion":
        c = lambda p: complex(p[0], p[1])
        return cls([c(a) for a in doc["coefficients"]],
                   [np.array([c(r) for r in layer], dtype=complex) for layer in doc["blaschke_layers"]],
                   list(doc["step_degrees"]), bool(doc["exact"]))


def blaschke_reflect(f: ScaledRootedPolynomial, boundary_tol: float = 1e-12):
    """Split off the inside roots: returns ``(inside_roots, g)`` with ``f = B * g``.

    Each inside root ``alpha != 0`` is replaced by ``1/conj(alpha)`` and the
    leading coefficient picks up ``-conj(alpha)``, because
    ``1 - conj(alpha) z = -conj(alpha) (z - 1/conj(alpha))``.  Roots at 0 just
    disappear.  Roots within ``boundary_tol`` of the unit circle stay in ``g``.
    """
    r = f.roots
    mod = np.abs(r)
    inside = mod < 1 - boundary_tol
    boundary = ~inside & (np.abs(mod - 1) <= boundary_tol)
    if boundary.any():
        warnings.warn(f"{int(boundary.sum())} root(s) on the unit circle left unreflected",
                      RuntimeWarning, stacklevel=2)
    ins = r[inside]
    nz = ins[ins != 0]
    new_roots = np.concatenate([r[~inside], 1.0 / np.conj(nz)])
    fac = -np.conj(nz)
    lead = LogComplex(f.log_lead.log_abs + float(np.log(np.abs(fac)).sum()),
                      f.log_lead.phase + float(np.angle(fac).sum()))
    return ins.copy(), ScaledRootedPolynomial(new_roots, lead)


def unwind(p: ScaledRootedPolynomial, solver_config: SolverConfig | None = None,
           boundary_tol: float = 1e-12) -> UnwindingExpansion:
    if p.degree < 1:
        raise ValueError("degree must be >= 1")
    cfg = solver_config or SolverConfig()
    coeffs, layers, degrees = [], [], []
    f = p
    exact = False
    for layer in range(p.degree + 1):
        degrees.append(f.degree)
        inside, g = blaschke_reflect(f, boundary_tol)
        layers.append(inside)
        if g.degree == 0:
            coeffs.append(g.lead)
            exact = True
            break
        a_log = log_eval(g, 0j)
        a = complex(a_log.to_complex())
        coeffs.append(a)
        if a == 0:
            # a_k underflowed: the tail is zero to double precision
            exact = True
            break
        try:
            sol = solve_shifted(g, a_log, cfg)
        except NonConvergence as exc:
            raise UnwindingFailure(f"layer {layer}: {exc}", layer, exc.partial) from exc
        roots = sol.solutions.copy()
        roots[[s == SeedKind.ORIGIN for s in sol.seed_provenance]] = 0
        f = ScaledRootedPolynomial(roots, g.log_lead)
    return UnwindingExpansion(coeffs, layers, degrees, exact)


def _blaschke(layer, z):
    out = np.ones(z.shape, dtype=complex)
    for a in layer:
        out *= (z - a) / (1 - np.conj(a) * z)
    return out


def reconstruct(exp: UnwindingExpansion, z) -> np.ndarray:
    """``sum_k a_k prod_{j<=k} B_j(z)``; intended for ``|z| = 1``."""
    z = np.asarray(z, dtype=complex)
    prod = np.ones(z.shape, dtype=complex)
    total = np.zeros(z.shape, dtype=complex)
    for a, layer in zip(exp.coefficients, exp.blaschke_layers):
        prod = prod * _blaschke(layer, z)
        total = total + a * prod
    return total if z.ndim else complex(total)


def coefficient_decay(exp: UnwindingExpansion) -> dict:
    """Least-squares slope of ``log|a_k|``; geometric decay means a negative slope."""
    a = np.abs(np.asarray(exp.coefficients, dtype=complex))
    k = np.flatnonzero(a > 0)
    if k.size < 3:
        return {"slope": None, "geometric": None, "log_abs": np.log(a[k]).tolist()}
    slope, intercept = np.polyfit(k, np.log(a[k]), 1)
    resid = np.log(a[k]) - (slope * k + intercept)
    return {"slope": float(slope), "geometric": bool(slope < 0 and np.std(resid) < 1.0),
            "log_abs": np.log(a[k]).tolist()}


def write_error_profile_csv(path, exp: UnwindingExpansion, p: ScaledRootedPolynomial,
                            points: int = 1024) -> float:
    th = 2 * np.pi * np.arange(points) / points
    z = np.exp(1j * th)
    ref = p(z)
    rec = reconstruct(exp, z)
    err = np.abs(rec - ref)
    scale = np.abs(ref).max()
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "abs_error", "rel_error"])
        for t, e in zip(th, err):
            w.writerow([repr(float(t)), repr(float(e)), repr(float(e / scale))])
    return float(err.max() / scale)


# ---------------------------------------------------------------------------
# invariance of outside-root polynomials
# ---------------------------------------------------------------------------


@dataclass
class CorollaryReport:
    n: int
    trials: int
    inside_disk_fraction: float
    inside_disk_se: float
    ks_distance: float
    ks_pvalue: float
    nontrivial_count: int
    per_trial_inside: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _inner_radius(measure: MeasureSpec) -> float:
    rmin = math.inf
    for comp in measure.components:
        if isinstance(comp, RadialDensity):
            r, phi = np.asarray(comp.r), np.asarray(comp.phi)
            pos = np.flatnonzero(phi > 0)
            rmin = min(rmin, r[max(pos[0] - 1, 0)] if pos[0] > 0 else r[0])
        elif isinstance(comp, UniformCircle):
            rmin = min(rmin, comp.radius)
        elif isinstance(comp, (TruncatedRadialGaussian, PointMass)):
            rmin = 0.0
        else:
            rmin = min(rmin, float(np.abs(comp.support_points(0.01)).min()))
    return rmin


def corollary_check(measure: MeasureSpec, n: int, trials: int, rng_seed: int,
                    solver_config: SolverConfig | None = None, seeds=None) -> CorollaryReport:
    """Nontrivial solutions of ``p(z) = p(0)`` for radial ``mu`` living outside the disk.

    They should all leave the unit disk and be distributed like ``mu`` itself.
    ``seeds`` optionally gives one sampling seed per trial.
    """
    if not measure.is_radial:
        raise PreconditionError("measure must be radial about the origin")
    if not _inner_radius(measure) > 1:
        raise PreconditionError("support must stay outside the closed unit disk")
    if seeds is None:
        seeds = np.random.SeedSequence(rng_seed).generate_state(trials, dtype=np.uint64)
    radii, per = [], []
    for s in seeds:
        roots = measure.sample(np.random.default_rng(int(s)), n)
        sol = solve_shifted(ScaledRootedPolynomial(roots), None, solver_config)
        w = sol.nontrivial
        per.append(float(np.mean(np.abs(w) < 1)) if w.size else 0.0)
        radii.append(np.abs(w))
    r = np.concatenate(radii)
    frac = float(np.mean(r < 1)) if r.size else 0.0
    ks = stats.kstest(r, measure.radial_cdf)
    return CorollaryReport(n, len(seeds), frac, math.sqrt(frac * (1 - frac) / max(r.size, 1)),
                           float(ks.statistic), float(ks.pvalue), int(r.size), per)
