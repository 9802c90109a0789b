"""All solutions of ``p(z) = c`` for product-form ``p``, in log space.

The iteration is a Jacobi-style Aberth-Ehrlich sweep.  For ``f = p - c`` the
Newton quotient is never formed from values of ``p``; instead

    f'/f = (p'/p) / (1 - c/p),   c/p = exp(log c - log p),

so only :func:`~randpoly.polynomials.log_eval` and the logarithmic derivative
are needed.  Seeds are the roots of ``p`` (slightly jittered) plus the origin
whenever ``c = p(0)``: a solution of ``p(z) = p(0)`` usually sits
exponentially close to a root of ``p``.

Because those solutions can be closer to a root than one ulp, every iterate
is stored as ``anchor root + offset``; the anchor's factor is evaluated from
the offset, never from the rounded sum.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .polynomials import LogComplex, ScaledRootedPolynomial, expm1_log, log_eval

__all__ = [
    "SeedKind",
    "SolverConfig",
    "SolutionSet",
    "ValidationReport",
    "NonConvergence",
    "DegenerateTarget",
    "solve_shifted",
    "solve_at_origin_value",
    "validate",
    "write_solutions_csv",
]

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class SeedKind(str, Enum):
    ORIGIN = "OriginSeed"
    ROOT = "RootSeed"
    FALLBACK = "FallbackSeed"


class NonConvergence(RuntimeError):
    def __init__(self, message: str, partial: "SolutionSet | None" = None):
        super().__init__(message)
        self.partial = partial


class DegenerateTarget(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8               # accept |p(w) - c| <= tol * |c|
    step_tol: float = 1e-12         # relative to the root-set scale
    residual_stop: float = 1e-13
    max_iters: int = 500
    jitter: float = 1e-3
    seed: int = 0
    cluster_tol: float = 1e-9       # relative to scale
    max_reseeds: int = 3


@dataclass
class SolutionSet:
    solutions: np.ndarray
    residual_log: np.ndarray
    seed_provenance: list
    iterations: int
    anchors: np.ndarray             # index of the anchoring root, -1 for none
    offsets: np.ndarray             # solution - roots[anchor] (exact offset)
    multiplicity: np.ndarray = field(default=None)
    scale: float = 1.0

    def __post_init__(self):
        if self.multiplicity is None:
            self.multiplicity = np.ones(len(self.solutions), dtype=int)

    def __len__(self) -> int:
        return len(self.solutions)

    @property
    def nontrivial(self) -> np.ndarray:
        """Solutions other than the exact origin solution."""
        keep = np.array([s != SeedKind.ORIGIN for s in self.seed_provenance], dtype=bool)
        return self.solutions[keep]

    def nearest_root_distance(self, p: ScaledRootedPolynomial) -> np.ndarray:
        return _nearest_root_distance(p, self.solutions, self.anchors, self.offsets)


@dataclass
class ValidationReport:
    count_ok: bool
    expected: int
    found: int
    residual_log: np.ndarray
    residual_ok: bool
    clusters: list
    nearest_root_distance: np.ndarray

    @property
    def passed(self) -> bool:
        return self.count_ok and self.residual_ok and not self.clusters


# ---------------------------------------------------------------------------
# anchored evaluation
# ---------------------------------------------------------------------------


def _differences(roots, w, anchors, offsets):
    d = w[:, None] - roots[None, :]
    has = anchors >= 0
    rows = np.flatnonzero(has)
    d[rows, anchors[has]] = offsets[has]
    return d


def _anchored_log_eval(p, w, anchors, offsets):
    d = _differences(p.roots, w, anchors, offsets)
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(d)).sum(axis=1) + p.log_lead.log_abs
    ph = np.angle(d).sum(axis=1) + p.log_lead.phase
    return la, ph, d


def _residual_log(la, ph, c_log):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(expm1_log(la - c_log.log_abs, ph - c_log.phase)))


def _nearest_root_distance(p, w, anchors, offsets):
    if len(w) == 0:
        return np.empty(0)
    d = np.abs(_differences(p.roots, np.asarray(w), np.asarray(anchors), np.asarray(offsets)))
    return d.min(axis=1)


def _newton_terms(la, ph, d, anchors, offsets, c_log):
    """Pieces of the Newton quotient for ``f = p - c`` from log data.

    Returns ``(inv, term)`` where ``inv = f'/f`` and, for an iterate anchored at
    root ``a`` with offset ``delta``, ``term = (t + delta*R)/(1 - t)`` with
    ``t = c/p`` and ``R = sum_{j != a} 1/(w - z_j)``.  ``term`` lets the offset
    update avoid subtracting two nearly equal numbers.
    """
    has = anchors >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        recip = 1.0 / d
    rows = np.flatnonzero(has)
    anchor_recip = np.zeros(len(la), dtype=complex)
    anchor_recip[rows] = recip[rows, anchors[has]]
    recip[rows, anchors[has]] = 0
    rest = recip.sum(axis=1)
    ratio = rest + anchor_recip
    delta = np.where(has, offsets, 0j)
    da = c_log.log_abs - la
    dp = c_log.phase - ph
    inv = np.empty(la.shape, dtype=complex)
    term = np.empty(la.shape, dtype=complex)
    low = da <= 0                      # |c| <= |p|
    hi = ~low
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        one_minus_t = -expm1_log(da[low], dp[low])
        t = np.exp(da[low]) * np.exp(1j * dp[low])
        inv[low] = ratio[low] / one_minus_t
        term[low] = (t + delta[low] * rest[low]) / one_minus_t
        s = np.exp(-da[hi]) * np.exp(-1j * dp[hi])
        em = expm1_log(-da[hi], -dp[hi])
        inv[hi] = ratio[hi] * s / em
        term[hi] = (1.0 + delta[hi] * rest[hi] * s) / em
    return inv, term


# ---------------------------------------------------------------------------
# iteration
# ---------------------------------------------------------------------------


def _pair_differences(roots, w, anchors, offsets):
    # (w_i - w_j) computed from anchors so that sub-ulp offsets survive
    base = np.where(anchors >= 0, roots[np.maximum(anchors, 0)], w)
    off = np.where(anchors >= 0, offsets, 0j)
    return (base[:, None] - base[None, :]) + (off[:, None] - off[None, :])


def _reanchor(roots, w, anchors, offsets, idx):
    if len(roots) == 0 or len(idx) == 0:
        return
    d = _differences(roots, w[idx], anchors[idx], offsets[idx])
    near = np.abs(d).argmin(axis=1)
    moved = near != anchors[idx]
    for k in np.flatnonzero(moved):
        i = idx[k]
        anchors[i] = near[k]
        offsets[i] = d[k, near[k]]


def _aberth(p, c_log, w, anchors, offsets, active, scale, cfg):
    """Run sweeps in place; returns (iterations used, converged mask)."""
    roots = p.roots
    conv = ~active.copy()
    log_stop = math.log(cfg.residual_stop)
    log_tol = math.log(cfg.tol)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        idx = np.flatnonzero(~conv)
        if idx.size == 0:
            return it - 1, conv
        la, ph, d = _anchored_log_eval(p, w[idx], anchors[idx], offsets[idx])
        hit = np.any(d == 0, axis=1)
        if np.any(hit):
            # exactly on a root of p: nudge and retry next sweep
            j = idx[hit]
            offsets[j] = offsets[j] + 1e-14 * scale
            w[j] = np.where(anchors[j] >= 0, roots[np.maximum(anchors[j], 0)] + offsets[j], w[j])
            continue
        res = _residual_log(la, ph, c_log)
        inv, term = _newton_terms(la, ph, d, anchors[idx], offsets[idx], c_log)
        pd = _pair_differences(roots, w, anchors, offsets)[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            rep = 1.0 / pd
        rep[np.arange(idx.size), idx] = 0
        rep[~np.isfinite(rep)] = 0
        srep = rep.sum(axis=1)
        denom = inv - srep
        has = anchors[idx] >= 0
        before = np.where(has, np.abs(offsets[idx]), np.abs(w[idx]))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = 1.0 / denom
            new_off = (term - offsets[idx] * srep) / denom
        exact = ~np.isfinite(inv)
        step[exact] = 0
        new_off[exact] = offsets[idx][exact]
        bad = ~np.isfinite(step) | (has & ~np.isfinite(new_off))
        kick = 1e-6 * scale * np.exp(1j * GOLDEN_ANGLE * (idx[bad] + it))
        step[bad] = kick
        new_off[bad] = offsets[idx][bad] - kick
        offsets[idx[has]] = new_off[has]
        w[idx] = np.where(has, roots[np.maximum(anchors[idx], 0)] + offsets[idx], w[idx] - step)
        mag = np.abs(step)
        done = (res <= log_stop) | (mag <= 1e-14 * before) \
            | ((mag <= cfg.step_tol * scale) & (res <= log_tol))
        conv[idx[done]] = True
        _reanchor(roots, w, anchors, offsets, idx[~done])
    return it, conv


def solve_shifted(p: ScaledRootedPolynomial, c_log: LogComplex | None = None,
                  config: SolverConfig | None = None) -> SolutionSet:
    """All ``p.degree`` solutions of ``p(z) = c`` with ``c = exp(c_log)``.

    ``c_log`` defaults to ``log p(0)``, the canonical target; in that case the
    origin is returned as an exact solution (provenance ``OriginSeed``).
    """
    cfg = config or SolverConfig()
    n = p.degree
    if n < 1:
        raise ValueError("degree must be >= 1")
    if c_log is None:
        c_log = log_eval(p, 0j)
    c_log = LogComplex(float(c_log[0]), float(c_log[1]))
    roots = p.roots
    if c_log.log_abs == -math.inf:
        # c = 0: the solutions are the roots themselves
        return SolutionSet(roots.copy(), np.full(n, -np.inf), [SeedKind.ROOT] * n, 0,
                           np.arange(n), np.zeros(n, complex), scale=p.bounding_radius())
    if not (math.isfinite(c_log.log_abs) and math.isfinite(c_log.phase)):
        raise DegenerateTarget(f"target log-value {tuple(c_log)} is not finite")

    scale = p.bounding_radius()
    scale = max(scale, math.exp((c_log.log_abs - p.log_lead.log_abs) / n), 1e-300)

    l0 = log_eval(p, 0j)
    origin = bool(_residual_log(np.array([l0.log_abs]), np.array([l0.phase]), c_log)[0]
                  <= math.log(cfg.residual_stop))

    rng = np.random.default_rng(cfg.seed)
    order = np.arange(n)
    if origin:
        drop = int(np.argmin(np.abs(roots)))
        order = np.delete(order, drop)
    local = _local_scale(roots, scale)
    mag = cfg.jitter * np.minimum(local[order], scale)
    jit = mag * np.exp(2j * np.pi * rng.uniform(0, 1, order.size))

    m = n
    w = np.empty(m, dtype=complex)
    anchors = np.full(m, -1, dtype=int)
    offsets = np.zeros(m, dtype=complex)
    prov = []
    k0 = 0
    if origin:
        w[0] = 0j
        prov.append(SeedKind.ORIGIN)
        k0 = 1
    anchors[k0:] = order
    offsets[k0:] = jit
    w[k0:] = roots[order] + jit
    prov.extend([SeedKind.ROOT] * order.size)
    active = np.ones(m, dtype=bool)
    if origin:
        active[0] = False

    iters, conv = _aberth(p, c_log, w, anchors, offsets, active, scale, cfg)
    total_iters = iters
    if not np.all(conv):
        bad = np.flatnonzero(~conv)
        for k, i in enumerate(bad):
            w[i] = 2 * scale * np.exp(1j * GOLDEN_ANGLE * (k + 1))
            anchors[i] = -1
            offsets[i] = 0
            prov[i] = SeedKind.FALLBACK
        _reanchor(roots, w, anchors, offsets, bad)
        act = np.zeros(m, dtype=bool)
        act[bad] = True
        iters, conv2 = _aberth(p, c_log, w, anchors, offsets, act, scale, cfg)
        total_iters += iters
        conv = conv | conv2

    for attempt in range(cfg.max_reseeds):
        groups = _clusters(roots, w, anchors, offsets, cfg.cluster_tol * scale)
        if not groups:
            break
        act = np.zeros(m, dtype=bool)
        for g in groups:
            center = w[g[0]]
            radius = 1e-6 * scale * 10.0 ** attempt
            for k, i in enumerate(g[1:]):
                w[i] = center + radius * np.exp(1j * (GOLDEN_ANGLE * k + 0.3))
                anchors[i] = -1
                offsets[i] = 0
                act[i] = True
        _reanchor(roots, w, anchors, offsets, np.flatnonzero(act))
        iters, conv2 = _aberth(p, c_log, w, anchors, offsets, act, scale, cfg)
        total_iters += iters
        conv = conv & ~act | conv2

    la, ph, _ = _anchored_log_eval(p, w, anchors, offsets)
    res = _residual_log(la, ph, c_log)
    if origin:
        res[0] = _residual_log(np.array([l0.log_abs]), np.array([l0.phase]), c_log)[0]
    mult = np.ones(m, dtype=int)
    for g in _clusters(roots, w, anchors, offsets, cfg.cluster_tol * scale):
        mult[g] = len(g)
    out = SolutionSet(w, res, prov, total_iters, anchors, offsets, mult, scale)
    if not np.all(conv) or np.any(res > math.log(cfg.tol)):
        nbad = int(np.sum(~conv | (res > math.log(cfg.tol))))
        raise NonConvergence(f"{nbad} of {m} solutions failed to converge", out)
    return out


def solve_at_origin_value(p: ScaledRootedPolynomial, config: SolverConfig | None = None):
    """Solutions of the canonical equation ``p(z) = p(0)``."""
    return solve_shifted(p, None, config)


def _local_scale(roots, scale):
    n = len(roots)
    if n < 2:
        return np.full(n, scale)
    d = np.abs(roots[:, None] - roots[None, :])
    d[d == 0] = np.inf
    near = d.min(axis=1)
    return np.where(np.isfinite(near), near, scale)


def _clusters(roots, w, anchors, offsets, tol):
    m = len(w)
    if m < 2:
        return []
    pd = np.abs(_pair_differences(roots, w, anchors, offsets))
    np.fill_diagonal(pd, np.inf)
    close = pd < tol
    seen = np.zeros(m, dtype=bool)
    groups = []
    for i in range(m):
        if seen[i] or not close[i].any():
            continue
        stack, grp = [i], []
        seen[i] = True
        while stack:
            j = stack.pop()
            grp.append(j)
            for k in np.flatnonzero(close[j] & ~seen):
                seen[k] = True
                stack.append(k)
        groups.append(sorted(grp))
    return groups


def validate(solset: SolutionSet, p: ScaledRootedPolynomial, c_log: LogComplex | None = None,
             tol: float = 1e-8, cluster_tol: float = 1e-9) -> ValidationReport:
    """Recompute residuals and structural checks independently of the solver state."""
    if c_log is None:
        c_log = log_eval(p, 0j)
    c_log = LogComplex(float(c_log[0]), float(c_log[1]))
    w = np.asarray(solset.solutions, dtype=complex)
    anchors = np.asarray(solset.anchors)
    offsets = np.asarray(solset.offsets)
    if len(w):
        la, ph, _ = _anchored_log_eval(p, w, anchors, offsets)
        res = _residual_log(la, ph, c_log)
    else:
        res = np.empty(0)
    scale = max(p.bounding_radius(), 1e-300)
    groups = _clusters(p.roots, w, anchors, offsets, cluster_tol * scale) if len(w) else []
    return ValidationReport(
        count_ok=len(w) == p.degree,
        expected=p.degree,
        found=len(w),
        residual_log=res,
        residual_ok=bool(np.all(res <= math.log(tol))),
        clusters=groups,
        nearest_root_distance=_nearest_root_distance(p, w, anchors, offsets),
    )


def write_solutions_csv(path, results) -> None:
    """``results`` is an iterable of ``(trial_id, SolutionSet, polynomial)``."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["trial_id", "re", "im", "residual_log", "seed_provenance",
                     "nearest_original_root_dist"])
        for trial_id, sol, poly in results:
            near = sol.nearest_root_distance(poly)
            for k in range(len(sol)):
                z = sol.solutions[k]
                wr.writerow([trial_id, repr(float(z.real)), repr(float(z.imag)),
                             repr(float(sol.residual_log[k])), sol.seed_provenance[k].value,
                             repr(float(near[k]))])
