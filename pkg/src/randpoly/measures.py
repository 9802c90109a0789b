"""Planar probability measures and their logarithmic potentials.

A :class:`MeasureSpec` is a finite mixture of analytic components.  Every
component knows how to sample itself and how to evaluate

* the logarithmic potential ``U(z) = int log|x - z| dmu(x)``,
* the Cauchy transform ``C(z) = int dmu(x) / (z - x)``,

in closed form.  The gradient of ``U`` (as a plane vector encoded complex) is
``conj(C)``.

Array methods on the components and on :class:`MeasureSpec` are permissive:
they return ``-inf`` at point atoms and ``nan`` on singular support.  The
module-level functions (:func:`log_potential`, :func:`cauchy_transform`, ...)
take a single point and raise instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import special

__all__ = [
    "MeasureError",
    "NegativeInfinity",
    "OnSingularSupport",
    "UniformCircle",
    "RadialDensity",
    "TruncatedRadialGaussian",
    "PointMass",
    "EmpiricalUniform",
    "MeasureSpec",
    "sample",
    "log_potential",
    "cauchy_transform",
    "potential_gradient",
    "region_mass",
    "two_circle",
    "annulus",
    "unit_circle",
    "delta",
    "truncated_gaussian",
]

EULER_GAMMA = 0.5772156649015329
# relative band around a circle inside which the Cauchy transform is undefined
_ON_CIRCLE_RTOL = 1e-13


class MeasureError(ValueError):
    """Invalid measure specification."""


class NegativeInfinity(ArithmeticError):
    """The potential is -inf (the query point is a point atom)."""


class OnSingularSupport(ArithmeticError):
    """The Cauchy transform is undefined at this point (circle or atom)."""


def _as_complex(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


def _point(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise MeasureError(f"a point needs two coordinates, got {v!r}")
        v = complex(float(v[0]), float(v[1]))
    v = complex(v)
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise MeasureError(f"non-finite point {v!r}")
    return v


def _ein(u: np.ndarray) -> np.ndarray:
    """Entire exponential integral ``int_0^u (1 - e^-t)/t dt``."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u < 2.0
    us = u[small]
    term = us.copy()
    acc = us.copy()
    for k in range(2, 40):
        term = -term * us / k
        acc = acc + term / k
    out[small] = acc
    ul = u[~small]
    out[~small] = special.exp1(ul) + EULER_GAMMA + np.log(ul)
    return out


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformCircle:
    """Normalized arclength measure on the circle ``|z - center| = radius``."""

    center: complex = 0j
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise MeasureError("circle radius must be positive")

    @property
    def is_radial(self) -> bool:
        return self.center == 0

    def potential(self, z) -> np.ndarray:
        return np.log(np.maximum(np.abs(_as_complex(z) - self.center), self.radius))

    def cauchy(self, z) -> np.ndarray:
        d = _as_complex(z) - self.center
        a = np.abs(d)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.where(a > self.radius, 1.0 / d, 0j)
        on = np.abs(a - self.radius) <= _ON_CIRCLE_RTOL * self.radius
        return np.where(on, complex(np.nan, np.nan), out)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        theta = rng.uniform(0.0, 2.0 * np.pi, count)
        return self.center + self.radius * np.exp(1j * theta)

    def radial_cdf(self, s) -> np.ndarray:
        return (np.asarray(s, dtype=float) >= self.radius).astype(float)

    def bounding_radius(self) -> float:
        return abs(self.center) + self.radius

    def bbox(self) -> tuple[float, float, float, float]:
        c, r = self.center, self.radius
        return c.real - r, c.real + r, c.imag - r, c.imag + r

    def support_points(self, spacing: float) -> np.ndarray:
        k = max(16, int(math.ceil(2 * np.pi * self.radius / spacing)))
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(k) / k)

    def support_distance(self, z) -> np.ndarray:
        return np.abs(np.abs(_as_complex(z) - self.center) - self.radius)

    def to_dict(self) -> dict:
        return {"type": "uniform_circle", "center": [self.center.real, self.center.imag],
                "radius": self.radius}


@dataclass(frozen=True)
class RadialDensity:
    """Density ``phi(|z - center|) dx dy`` with ``phi`` piecewise linear.

    ``r`` are the knots (increasing, ``r[0] >= 0``) and ``phi`` the nonnegative
    values there; ``phi`` vanishes outside ``[r[0], r[-1]]``.  The table is
    rescaled on construction so that ``2 pi int phi(r) r dr = 1``.
    """

    r: tuple
    phi: tuple
    center: complex = 0j
    _alpha: np.ndarray = field(init=False, repr=False, compare=False)
    _beta: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if r.ndim != 1 or r.shape != phi.shape or r.size < 2:
            raise MeasureError("radial table needs >= 2 matching knots")
        if r[0] < 0 or np.any(np.diff(r) <= 0) or not np.all(np.isfinite(r)):
            raise MeasureError("radial knots must be finite, nonnegative, increasing")
        if np.any(phi < 0) or not np.all(np.isfinite(phi)):
            raise MeasureError("radial density values must be finite and nonnegative")
        beta = np.diff(phi) / np.diff(r)
        alpha = phi[:-1] - beta * r[:-1]
        seg = self._seg_mass(alpha, beta, r[:-1], r[1:])
        total = seg.sum()
        if not total > 0:
            raise MeasureError("radial density has zero mass")
        phi = phi / total
        alpha, beta, seg = alpha / total, beta / total, seg / total
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        object.__setattr__(self, "r", tuple(r.tolist()))
        object.__setattr__(self, "phi", tuple(phi.tolist()))
        object.__setattr__(self, "center", _point(self.center))
        object.__setattr__(self, "_alpha", alpha)
        object.__setattr__(self, "_beta", beta)
        object.__setattr__(self, "_cum", cum)

    @staticmethod
    def _seg_mass(alpha, beta, a, b):
        return 2 * np.pi * (alpha * (b**2 - a**2) / 2 + beta * (b**3 - a**3) / 3)

    @staticmethod
    def _antider(alpha, beta, r):
        # antiderivative of r*phi(r)*log(r); vanishes at r = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
        return alpha * (r**2 * lr / 2 - r**2 / 4) + beta * (r**3 * lr / 3 - r**3 / 9)

    @property
    def is_radial(self) -> bool:
        return self.center == 0

    @property
    def total_mass(self) -> float:
        return float(self._cum[-1])

    def radial_cdf(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        knots = np.asarray(self.r)
        lo, hi = knots[:-1], knots[1:]
        c = np.clip(s[..., None], lo, hi)
        return self._seg_mass(self._alpha, self._beta, lo, c).sum(axis=-1)

    def _potential_radius(self, s: np.ndarray) -> np.ndarray:
        knots = np.asarray(self.r)
        lo, hi = knots[:-1], knots[1:]
        c = np.clip(s[..., None], lo, hi)
        inner = self._seg_mass(self._alpha, self._beta, lo, c).sum(axis=-1)
        outer = 2 * np.pi * (self._antider(self._alpha, self._beta, hi)
                             - self._antider(self._alpha, self._beta, c)).sum(axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            head = np.where(inner > 0, inner * np.log(np.where(s > 0, s, 1.0)), 0.0)
        return head + outer

    def potential(self, z) -> np.ndarray:
        s = np.abs(_as_complex(z) - self.center)
        return self._potential_radius(s)

    def cauchy(self, z) -> np.ndarray:
        d = _as_complex(z) - self.center
        m = self.radial_cdf(np.abs(d))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(d != 0, m / d, 0j)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        u = rng.uniform(0.0, 1.0, count)
        theta = rng.uniform(0.0, 2.0 * np.pi, count)
        j = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, len(self.r) - 2)
        knots = np.asarray(self.r)
        a, b = knots[j].copy(), knots[j + 1].copy()
        target = u - self._cum[j]
        lo = a.copy()
        al, be = self._alpha[j], self._beta[j]
        for _ in range(64):
            mid = 0.5 * (a + b)
            below = self._seg_mass(al, be, lo, mid) < target
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
        return self.center + 0.5 * (a + b) * np.exp(1j * theta)

    def bounding_radius(self) -> float:
        return abs(self.center) + self.r[-1]

    def bbox(self):
        c, r = self.center, self.r[-1]
        return c.real - r, c.real + r, c.imag - r, c.imag + r

    def support_points(self, spacing: float) -> np.ndarray:
        rings = np.arange(self.r[0], self.r[-1] + 0.5 * spacing, spacing)
        phi = np.interp(rings, self.r, self.phi)
        pts = []
        for rho, ph in zip(rings, phi):
            if ph <= 0:
                continue
            if rho == 0:
                pts.append(np.array([self.center]))
                continue
            k = max(8, int(math.ceil(2 * np.pi * rho / spacing)))
            pts.append(self.center + rho * np.exp(2j * np.pi * np.arange(k) / k))
        return np.concatenate(pts) if pts else np.empty(0, complex)

    def support_distance(self, z) -> np.ndarray:
        s = np.abs(_as_complex(z) - self.center)
        return np.maximum(0.0, np.maximum(self.r[0] - s, s - self.r[-1]))

    def to_dict(self) -> dict:
        return {"type": "radial_density", "r": list(self.r), "phi": list(self.phi),
                "center": [self.center.real, self.center.imag]}


@dataclass(frozen=True)
class TruncatedRadialGaussian:
    """Isotropic planar Gaussian restricted to the disk ``|z - center| <= cutoff``."""

    sigma: float = 1.0
    cutoff: float = 3.0
    center: complex = 0j

    def __post_init__(self):
        if not (self.sigma > 0 and self.cutoff > 0):
            raise MeasureError("sigma and cutoff must be positive")
        object.__setattr__(self, "center", _point(self.center))

    @property
    def is_radial(self) -> bool:
        return self.center == 0

    @property
    def _norm(self) -> float:
        return -math.expm1(-self.cutoff**2 / (2 * self.sigma**2))

    def radial_cdf(self, s) -> np.ndarray:
        s = np.minimum(np.asarray(s, dtype=float), self.cutoff)
        return -np.expm1(-s**2 / (2 * self.sigma**2)) / self._norm

    def _potential_radius(self, s: np.ndarray) -> np.ndarray:
        R, s2 = self.cutoff, 2 * self.sigma**2
        inside = s < R
        si = np.where(inside, s, 0.0)
        bracket = (math.log(R) + 0.5 * EULER_GAMMA - 0.5 * math.log(s2)
                   - 0.5 * _ein(si**2 / s2) + 0.5 * float(special.exp1(R**2 / s2)))
        u_in = math.log(R) - bracket / self._norm
        with np.errstate(divide="ignore"):
            return np.where(inside, u_in, np.log(np.where(inside, 1.0, s)))

    def potential(self, z) -> np.ndarray:
        return self._potential_radius(np.abs(_as_complex(z) - self.center))

    def cauchy(self, z) -> np.ndarray:
        d = _as_complex(z) - self.center
        m = self.radial_cdf(np.abs(d))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(d != 0, m / d, 0j)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        u = rng.uniform(0.0, 1.0, count)
        theta = rng.uniform(0.0, 2.0 * np.pi, count)
        s = np.sqrt(-2 * self.sigma**2 * np.log1p(-u * self._norm))
        return self.center + s * np.exp(1j * theta)

    def bounding_radius(self) -> float:
        return abs(self.center) + self.cutoff

    def bbox(self):
        c, r = self.center, self.cutoff
        return c.real - r, c.real + r, c.imag - r, c.imag + r

    def support_points(self, spacing: float) -> np.ndarray:
        return RadialDensity((0.0, self.cutoff), (1.0, 1.0), self.center).support_points(spacing)

    def support_distance(self, z) -> np.ndarray:
        return np.maximum(0.0, np.abs(_as_complex(z) - self.center) - self.cutoff)

    def to_dict(self) -> dict:
        return {"type": "truncated_radial_gaussian", "sigma": self.sigma, "cutoff": self.cutoff,
                "center": [self.center.real, self.center.imag]}


@dataclass(frozen=True)
class PointMass:
    location: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "location", _point(self.location))

    @property
    def is_radial(self) -> bool:
        return self.location == 0

    def potential(self, z) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(_as_complex(z) - self.location))

    def cauchy(self, z) -> np.ndarray:
        d = _as_complex(z) - self.location
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(d != 0, 1.0 / np.where(d != 0, d, 1.0), complex(np.nan, np.nan))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return np.full(count, self.location, dtype=complex)

    def radial_cdf(self, s) -> np.ndarray:
        return (np.asarray(s, dtype=float) >= abs(self.location)).astype(float)

    def bounding_radius(self) -> float:
        return abs(self.location)

    def bbox(self):
        a = self.location
        return a.real, a.real, a.imag, a.imag

    def support_points(self, spacing: float) -> np.ndarray:
        return np.array([self.location])

    def support_distance(self, z) -> np.ndarray:
        return np.abs(_as_complex(z) - self.location)

    def to_dict(self) -> dict:
        return {"type": "point_mass", "location": [self.location.real, self.location.imag]}


@dataclass(frozen=True)
class EmpiricalUniform:
    """Uniform measure on finitely many atoms."""

    atoms: tuple

    def __post_init__(self):
        pts = tuple(_point(a) for a in self.atoms)
        if not pts:
            raise MeasureError("empirical measure needs at least one atom")
        object.__setattr__(self, "atoms", pts)

    @property
    def _arr(self) -> np.ndarray:
        return np.asarray(self.atoms, dtype=complex)

    @property
    def is_radial(self) -> bool:
        return all(a == 0 for a in self.atoms)

    def potential(self, z) -> np.ndarray:
        z = _as_complex(z)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(z[..., None] - self._arr)).mean(axis=-1)

    def cauchy(self, z) -> np.ndarray:
        d = _as_complex(z)[..., None] - self._arr
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (1.0 / d).mean(axis=-1)
        return np.where(np.any(d == 0, axis=-1), complex(np.nan, np.nan), out)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self._arr[rng.integers(0, len(self.atoms), count)]

    def radial_cdf(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return (s[..., None] >= np.abs(self._arr)).mean(axis=-1)

    def bounding_radius(self) -> float:
        return float(np.abs(self._arr).max())

    def bbox(self):
        a = self._arr
        return a.real.min(), a.real.max(), a.imag.min(), a.imag.max()

    def support_points(self, spacing: float) -> np.ndarray:
        return self._arr.copy()

    def support_distance(self, z) -> np.ndarray:
        return np.abs(_as_complex(z)[..., None] - self._arr).min(axis=-1)

    def to_dict(self) -> dict:
        return {"type": "empirical_uniform", "atoms": [[a.real, a.imag] for a in self.atoms]}


Component = Union[UniformCircle, RadialDensity, TruncatedRadialGaussian, PointMass, EmpiricalUniform]

_TYPES = {
    "uniform_circle": lambda d: UniformCircle(_point(d.get("center", [0, 0])), float(d["radius"])),
    "radial_density": lambda d: RadialDensity(tuple(d["r"]), tuple(d["phi"]),
                                              _point(d.get("center", [0, 0]))),
    "truncated_radial_gaussian": lambda d: TruncatedRadialGaussian(
        float(d.get("sigma", 1.0)), float(d.get("cutoff", 3.0)), _point(d.get("center", [0, 0]))),
    "point_mass": lambda d: PointMass(_point(d["location"])),
    "empirical_uniform": lambda d: EmpiricalUniform(tuple(d["atoms"])),
}


# ---------------------------------------------------------------------------
# mixtures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureSpec:
    """Weighted mixture of components; weights are normalized to sum to one."""

    components: tuple
    weights: tuple = None

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise MeasureError("a measure needs at least one component")
        if self.weights is None:
            w = np.full(len(comps), 1.0 / len(comps))
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (len(comps),):
                raise MeasureError("one weight per component is required")
            if np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise MeasureError("weights must be positive")
            if abs(w.sum() - 1.0) > 1e-9:
                raise MeasureError(f"weights must sum to 1, got {w.sum()!r}")
            w = w / w.sum()
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", tuple(w.tolist()))

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "MeasureSpec":
        try:
            items = doc["components"]
        except (KeyError, TypeError):
            raise MeasureError("measure document needs a 'components' list") from None
        comps, weights = [], []
        for item in items:
            kind = item.get("type")
            if kind not in _TYPES:
                raise MeasureError(f"unknown component type {kind!r}")
            try:
                comps.append(_TYPES[kind](item))
            except KeyError as exc:
                raise MeasureError(f"{kind} component is missing {exc}") from None
            weights.append(item.get("weight"))
        if all(w is None for w in weights):
            return cls(tuple(comps))
        if any(w is None for w in weights):
            raise MeasureError("give weights for all components or for none")
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise MeasureError("weights must be positive")
        return cls(tuple(comps), tuple(w / w.sum()))

    def to_dict(self) -> dict:
        out = []
        for comp, w in zip(self.components, self.weights):
            d = comp.to_dict()
            d["weight"] = w
            out.append(d)
        return {"components": out}

    # -- evaluation -------------------------------------------------------

    def potential(self, z) -> np.ndarray:
        z = _as_complex(z)
        total = np.zeros(z.shape)
        for comp, w in zip(self.components, self.weights):
            total = total + w * comp.potential(z)
        return total

    def cauchy(self, z) -> np.ndarray:
        z = _as_complex(z)
        total = np.zeros(z.shape, dtype=complex)
        for comp, w in zip(self.components, self.weights):
            total = total + w * comp.cauchy(z)
        return total

    def gradient(self, z) -> np.ndarray:
        return np.conj(self.cauchy(z))

    def reference_potential(self) -> float:
        return float(self.potential(0j))

    def radial_cdf(self, s) -> np.ndarray:
        if not self.is_radial:
            raise MeasureError("radial CDF requires a measure radial about the origin")
        s = np.asarray(s, dtype=float)
        total = np.zeros(s.shape)
        for comp, w in zip(self.components, self.weights):
            total = total + w * comp.radial_cdf(s)
        return total

    # -- sampling ---------------------------------------------------------

    def sample(self, rng: np.random.Generator, count: int, stratified: bool = False) -> np.ndarray:
        k = len(self.components)
        w = np.asarray(self.weights)
        if stratified:
            raw = w * count
            counts = np.floor(raw).astype(int)
            order = np.argsort(-(raw - counts), kind="stable")
            counts[order[: count - counts.sum()]] += 1
            parts = [comp.sample(rng, int(c)) for comp, c in zip(self.components, counts)]
            out = np.concatenate(parts)
            return out[rng.permutation(count)]
        labels = rng.choice(k, size=count, p=w) if k > 1 else np.zeros(count, int)
        out = np.empty(count, dtype=complex)
        for i, comp in enumerate(self.components):
            idx = np.flatnonzero(labels == i)
            if idx.size:
                out[idx] = comp.sample(rng, idx.size)
        return out

    # -- geometry ---------------------------------------------------------

    @property
    def is_radial(self) -> bool:
        return all(c.is_radial for c in self.components)

    def bounding_radius(self) -> float:
        return max(c.bounding_radius() for c in self.components)

    def bbox(self) -> tuple[float, float, float, float]:
        boxes = np.array([c.bbox() for c in self.components])
        return (float(boxes[:, 0].min()), float(boxes[:, 1].max()),
                float(boxes[:, 2].min()), float(boxes[:, 3].max()))

    def circles(self) -> list[UniformCircle]:
        return [c for c in self.components if isinstance(c, UniformCircle)]

    def atoms(self) -> np.ndarray:
        pts = []
        for c in self.components:
            if isinstance(c, PointMass):
                pts.append(c.location)
            elif isinstance(c, EmpiricalUniform):
                pts.extend(c.atoms)
        return np.asarray(pts, dtype=complex)

    def support_points(self, spacing: float = 0.01) -> np.ndarray:
        return np.concatenate([c.support_points(spacing) for c in self.components])

    def support_distance(self, z) -> np.ndarray:
        return np.min([c.support_distance(z) for c in self.components], axis=0)

    def singular_support_distance(self, z) -> np.ndarray:
        """Distance to circles and atoms (where the Cauchy transform blows up or jumps)."""
        z = _as_complex(z)
        d = np.full(z.shape, np.inf)
        for c in self.components:
            if isinstance(c, (UniformCircle, PointMass, EmpiricalUniform)):
                d = np.minimum(d, c.support_distance(z))
        return d


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------


def sample(measure: MeasureSpec, rng_seed: int, count: int, stratified: bool = False) -> np.ndarray:
    """Draw ``count`` i.i.d. points (deterministic for a fixed seed)."""
    if count < 1:
        raise MeasureError("count must be >= 1")
    return measure.sample(np.random.default_rng(rng_seed), count, stratified=stratified)


def log_potential(measure: MeasureSpec, z: complex) -> float:
    u = float(measure.potential(complex(z)))
    if u == -np.inf:
        raise NegativeInfinity(f"potential is -inf at {z!r}")
    return u


def cauchy_transform(measure: MeasureSpec, z: complex) -> complex:
    c = complex(measure.cauchy(complex(z)))
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise OnSingularSupport(f"Cauchy transform undefined at {z!r}")
    return c


def potential_gradient(measure: MeasureSpec, z: complex) -> complex:
    return cauchy_transform(measure, z).conjugate()


def region_mass(measure: MeasureSpec, indicator: Callable[[np.ndarray], np.ndarray],
                rng_seed: int, samples: int = 100_000) -> tuple[float, float]:
    """Monte Carlo estimate of ``mu{indicator}`` with its binomial standard error.

    ``indicator`` is vectorized: it receives a complex array and returns a
    boolean array of the same shape.
    """
    if samples < 1000:
        raise MeasureError("region_mass needs at least 1000 samples")
    pts = sample(measure, rng_seed, samples)
    hits = np.asarray(indicator(pts), dtype=bool)
    p = float(hits.mean())
    return p, math.sqrt(p * (1 - p) / samples)


# ---------------------------------------------------------------------------
# named measures
# ---------------------------------------------------------------------------


def two_circle() -> MeasureSpec:
    """Equal mixture of the unit circles about 0 and about 2."""
    return MeasureSpec((UniformCircle(0j, 1.0), UniformCircle(2 + 0j, 1.0)), (0.5, 0.5))


def annulus(r_lo: float, r_hi: float) -> MeasureSpec:
    return MeasureSpec((RadialDensity((r_lo, r_hi), (1.0, 1.0)),))


def unit_circle() -> MeasureSpec:
    return MeasureSpec((UniformCircle(0j, 1.0),))


def delta(location: complex = 1.0) -> MeasureSpec:
    return MeasureSpec((PointMass(location),))


def truncated_gaussian(sigma: float = 1.0, cutoff: float = 3.0) -> MeasureSpec:
    return MeasureSpec((TruncatedRadialGaussian(sigma, cutoff),))
