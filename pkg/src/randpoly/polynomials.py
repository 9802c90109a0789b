"""Product-form polynomials evaluated in log space.

``p(z) = exp(log_lead) * prod_k (z - z_k)`` is never expanded into monomial
coefficients; magnitudes are carried as ``log|p|`` and phases as sums of
principal arguments, so degrees in the hundreds neither overflow nor lose
relative accuracy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "LogComplex",
    "ScaledRootedPolynomial",
    "AtRoot",
    "from_samples",
    "log_eval",
    "log_derivative_ratio",
    "write_roots_csv",
    "read_roots_csv",
    "wrap_phase",
    "expm1_log",
]

TWO_PI = 2.0 * math.pi


class AtRoot(ArithmeticError):
    """Evaluation point coincides with a root."""


class LogComplex(NamedTuple):
    """``exp(log_abs + i*phase)``; ``log_abs = -inf`` encodes zero.

    Fields may be floats or equally shaped arrays.
    """

    log_abs: float
    phase: float

    @classmethod
    def from_complex(cls, c) -> "LogComplex":
        c = np.asarray(c, dtype=complex)
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(c))
        ph = np.angle(c)
        if la.ndim == 0:
            return cls(float(la), float(ph))
        return cls(la, ph)

    def to_complex(self):
        return np.exp(self.log_abs) * _unit(np.asarray(self.phase, dtype=float))

    @property
    def is_zero(self):
        return np.asarray(self.log_abs) == -np.inf

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(self.log_abs + other.log_abs, self.phase + other.phase)


ZERO_LOG = LogComplex(0.0, 0.0)


_QUARTER_TURNS = np.array([1, 1j, -1, -1j])


def _unit(phase):
    """``exp(i*phase)``, exact when ``phase`` is a multiple of pi/2 up to rounding."""
    q = np.round(phase / (0.5 * math.pi))
    snap = np.abs(phase - q * 0.5 * math.pi) <= 8e-16 * np.maximum(1.0, np.abs(phase))
    out = np.exp(1j * phase)
    if np.any(snap):
        exact = _QUARTER_TURNS[np.mod(q, 4).astype(int)]
        out = np.where(snap, exact, out)
    return out[()] if out.ndim == 0 else out


def wrap_phase(phi):
    """Reduce angles to ``[-pi, pi)``; angles already in range pass through untouched."""
    phi = np.asarray(phi)
    inside = (phi >= -math.pi) & (phi < math.pi)
    return np.where(inside, phi, np.mod(phi + math.pi, TWO_PI) - math.pi)


def expm1_log(d_abs, d_phase):
    """``exp(d_abs + i*d_phase) - 1`` without cancellation near zero."""
    b = wrap_phase(d_phase)
    eib = np.exp(1j * b)
    with np.errstate(over="ignore"):  # inf is the right answer far from the target
        return np.expm1(d_abs) * eib + 2j * np.sin(0.5 * b) * np.exp(0.5j * b)


@dataclass(frozen=True, eq=False)
class ScaledRootedPolynomial:
    roots: np.ndarray
    log_lead: LogComplex = ZERO_LOG

    def __post_init__(self):
        r = np.array(self.roots, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(r)):
            raise ValueError("roots must be finite")
        r.setflags(write=False)
        object.__setattr__(self, "roots", r)
        object.__setattr__(self, "log_lead",
                           LogComplex(float(self.log_lead[0]), float(self.log_lead[1])))

    @property
    def degree(self) -> int:
        return int(self.roots.size)

    @property
    def lead(self) -> complex:
        return complex(self.log_lead.to_complex())

    def bounding_radius(self) -> float:
        return float(np.abs(self.roots).max()) if self.degree else 0.0

    def log_eval(self, z) -> LogComplex:
        return log_eval(self, z)

    def __call__(self, z):
        """Direct value ``exp(log_eval)``; overflows for large degree by design."""
        return log_eval(self, z).to_complex()

    def shifted(self, w: complex) -> "ScaledRootedPolynomial":
        """The polynomial ``q(z) = p(z - w)``, i.e. roots moved by ``w``."""
        return ScaledRootedPolynomial(self.roots + w, self.log_lead)

    def __repr__(self) -> str:
        return f"ScaledRootedPolynomial(degree={self.degree}, log_lead={tuple(self.log_lead)})"


def from_samples(roots, log_lead: LogComplex = ZERO_LOG) -> ScaledRootedPolynomial:
    """Monic (by default) polynomial with the given roots."""
    r = np.asarray(roots, dtype=complex).reshape(-1)
    if r.size == 0:
        raise ValueError("a polynomial needs at least one root")
    return ScaledRootedPolynomial(r, log_lead)


def _chunks(z: np.ndarray, n: int, budget: int = 1 << 21):
    step = max(1, budget // max(n, 1))
    for i in range(0, z.size, step):
        yield slice(i, i + step)


def log_eval(p: ScaledRootedPolynomial, z) -> LogComplex:
    """``log p(z)`` as (log-magnitude, phase); ``-inf`` magnitude at a root."""
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1)
    la = np.empty(flat.shape)
    ph = np.empty(flat.shape)
    for sl in _chunks(flat, p.degree):
        d = flat[sl, None] - p.roots[None, :]
        with np.errstate(divide="ignore"):
            la[sl] = np.log(np.abs(d)).sum(axis=1)
        ph[sl] = np.angle(d).sum(axis=1)
    la = la + p.log_lead.log_abs
    ph = ph + p.log_lead.phase
    if z.ndim == 0:
        return LogComplex(float(la[0]), float(ph[0]))
    return LogComplex(la.reshape(z.shape), ph.reshape(z.shape))


def log_derivative_ratio(p: ScaledRootedPolynomial, z):
    """``p'(z)/p(z) = sum_k 1/(z - z_k)``."""
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for sl in _chunks(flat, p.degree):
        d = flat[sl, None] - p.roots[None, :]
        if np.any(d == 0):
            raise AtRoot("evaluation point coincides with a root")
        out[sl] = (1.0 / d).sum(axis=1)
    return complex(out[0]) if z.ndim == 0 else out.reshape(z.shape)


def write_roots_csv(path, roots) -> None:
    roots = np.asarray(roots, dtype=complex).reshape(-1)
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for r in roots:
            w.writerow([repr(float(r.real)), repr(float(r.imag))])


def read_roots_csv(path) -> np.ndarray:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not {"re", "im"} <= set(rows[0]):
        raise ValueError(f"{path}: expected columns re, im")
    return np.array([complex(float(r["re"]), float(r["im"])) for r in rows], dtype=complex)
