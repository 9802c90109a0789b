"""Seeded, parallel Monte Carlo runs with deterministic aggregation.

Every trial gets its own seed ``derive_seed(master, stage, degree, trial)``
built from SplitMix64, so results do not depend on execution order or on the
number of worker processes.  Trials are mapped over a process pool and
reduced in trial order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .measures import MeasureError, MeasureSpec, PointMass, EmpiricalUniform
from .polynomials import ScaledRootedPolynomial
from .shifted_solver import SeedKind, SolverConfig, solve_shifted

__all__ = [
    "ConfigError",
    "InsufficientConditionalSamples",
    "ExperimentConfig",
    "AggregateReport",
    "splitmix64",
    "derive_seed",
    "run_reproduction",
    "run_lemma5",
    "run_lemma6",
    "proximity_diagnostic",
    "bubble_diagnostic",
    "write_outputs",
    "config_hash",
]

MASK64 = (1 << 64) - 1
STAGES = {"reproduction": 1, "lemma5": 5, "lemma6": 6, "proximity": 7, "bubble": 8}


class ConfigError(ValueError):
    pass


class InsufficientConditionalSamples(RuntimeError):
    def __init__(self, message, probe, degree, count):
        super().__init__(message)
        self.probe, self.degree, self.count = probe, degree, count


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (Steele, Lea & Flood constants)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *keys: int) -> int:
    """Fold integer keys into a 64-bit seed: ``s <- splitmix64(s ^ key)`` per key."""
    s = splitmix64(int(master) & MASK64)
    for k in keys:
        s = splitmix64(s ^ (int(k) & MASK64))
    return s


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    measure: MeasureSpec
    degrees: list = field(default_factory=lambda: [30])
    trials: int = 100
    rng_seed: int = 0
    c1: float = 0.2
    c2: float = 0.5
    lemma5_cell: float = 0.05
    exclusion_radius: float = 1e-3
    tube_radius: float = 0.05
    output_dir: str | None = None
    threads: int = 1
    stratified: bool = False
    probes: list | None = None
    min_conditioning: int = 50
    forbidden_radius: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.degrees or any(int(d) < 1 for d in self.degrees):
            raise ConfigError("degrees must be a nonempty list of positive integers")
        self.degrees = [int(d) for d in self.degrees]
        if not (self.c1 >= 0 and self.c2 > 0):
            raise ConfigError("c1 must be >= 0 and c2 > 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown experiment keys: {sorted(extra)}")
        if "measure" not in doc:
            raise ConfigError("experiment config needs a measure")
        try:
            m = doc["measure"]
            doc["measure"] = m if isinstance(m, MeasureSpec) else MeasureSpec.from_dict(m)
        except MeasureError as exc:
            raise ConfigError(str(exc)) from None
        if isinstance(doc.get("solver"), dict):
            sk = {f.name for f in fields(SolverConfig)}
            bad = set(doc["solver"]) - sk
            if bad:
                raise ConfigError(f"unknown solver keys: {sorted(bad)}")
            doc["solver"] = SolverConfig(**doc["solver"])
        if doc.get("probes") is not None:
            doc["probes"] = [complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p)
                             for p in doc["probes"]]
        return cls(**doc)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["measure"] = self.measure.to_dict()
        d["solver"] = asdict(self.solver)
        if self.probes is not None:
            d["probes"] = [[complex(p).real, complex(p).imag] for p in self.probes]
        return d


def config_hash(config: ExperimentConfig) -> str:
    doc = config.to_dict()
    doc.pop("output_dir", None)
    doc.pop("threads", None)
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class AggregateReport:
    kind: str
    per_degree: dict
    timings: dict
    config_hash: str
    rng_seed: int
    trial_rows: list = field(default_factory=list, repr=False)
    trial_header: list = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable({"kind": self.kind, "per_degree": self.per_degree,
                          "extra": self.extra, "timings": self.timings,
                          "config_hash": self.config_hash, "rng_seed": self.rng_seed})


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


# ---------------------------------------------------------------------------
# trial execution
# ---------------------------------------------------------------------------


def _pmap(fn, tasks, threads):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


def _sample_roots(measure, n, seed, stratified):
    return measure.sample(np.random.default_rng(seed), n, stratified=stratified)


def _solve_task(task):
    measure, n, seed, stratified, solver = task
    roots = _sample_roots(measure, n, seed, stratified)
    p = ScaledRootedPolynomial(roots)
    sol = solve_shifted(p, None, solver)
    return {
        "roots": roots,
        "solutions": sol.solutions,
        "residual_log": sol.residual_log,
        "provenance": [s.value for s in sol.seed_provenance],
        "origin": np.array([s == SeedKind.ORIGIN for s in sol.seed_provenance]),
        "nearest": sol.nearest_root_distance(p),
        "iterations": sol.iterations,
    }


def _solve_trials(config: ExperimentConfig, stage: str, n: int):
    seeds = [derive_seed(config.rng_seed, STAGES[stage], n, t) for t in range(config.trials)]
    tasks = [(config.measure, n, s, config.stratified, config.solver) for s in seeds]
    return seeds, _pmap(_solve_task, tasks, config.threads)


_SOLUTION_HEADER = ["degree", "trial_id", "trial_seed", "re", "im", "residual_log",
                    "seed_provenance", "nearest_original_root_dist"]


def _solution_rows(n, seeds, results):
    rows = []
    for t, (s, r) in enumerate(zip(seeds, results)):
        for k, z in enumerate(r["solutions"]):
            rows.append([n, t, s, repr(float(z.real)), repr(float(z.imag)),
                         repr(float(r["residual_log"][k])), r["provenance"][k],
                         repr(float(r["nearest"][k]))])
    return rows


def _binom(k, m):
    p = k / m if m else float("nan")
    return p, (math.sqrt(p * (1 - p) / m) if m else float("nan"))


def _inner_support_radius(measure: MeasureSpec) -> float:
    from .unwinding import _inner_radius

    return _inner_radius(measure)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def run_reproduction(config: ExperimentConfig) -> AggregateReport:
    """Radial measures: pooled nontrivial solutions should be distributed like ``mu``."""
    m = config.measure
    if not m.is_radial:
        raise ConfigError("the reproduction experiment needs a radial measure")
    r_forbid = config.forbidden_radius
    if r_forbid is None:
        r_forbid = _inner_support_radius(m)
    per, timings, rows = {}, {}, []
    for n in config.degrees:
        t0 = time.perf_counter()
        seeds, res = _solve_trials(config, "reproduction", n)
        w = np.concatenate([r["solutions"][~r["origin"]] for r in res]) if res else np.empty(0)
        radii = np.abs(w)
        if radii.size:
            ks = stats.kstest(radii, m.radial_cdf)
            ks_d, ks_p = float(ks.statistic), float(ks.pvalue)
        else:
            ks_d = ks_p = float("nan")
        f_in, se_in = _binom(int(np.sum(radii < r_forbid)), radii.size)
        f_unit, se_unit = _binom(int(np.sum(radii < 1.0)), radii.size)
        per[n] = {"ks_distance": ks_d, "ks_pvalue": ks_p, "nontrivial": int(radii.size),
                  "forbidden_radius": r_forbid, "inside_forbidden_fraction": f_in,
                  "inside_forbidden_se": se_in, "unit_disk_fraction": f_unit,
                  "unit_disk_se": se_unit,
                  "total_solutions": int(sum(len(r["solutions"]) for r in res))}
        rows.extend(_solution_rows(n, seeds, res))
        timings[f"degree_{n}"] = time.perf_counter() - t0
    return AggregateReport("reproduction", per, timings, config_hash(config), config.rng_seed,
                           rows, _SOLUTION_HEADER)


def _lemma5_grid(measure, cell):
    x0, x1, y0, y1 = measure.bbox()
    cx, cy, hx, hy = 0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.75 * (x1 - x0), 0.75 * (y1 - y0)
    xs = np.arange(cx - hx, cx + hx + 0.5 * cell, cell)
    ys = np.arange(cy - hy, cy + hy + 0.5 * cell, cell)
    return (xs[None, :] + 1j * ys[:, None]).ravel()


def _lemma5_task(task):
    measure, n, seed, stratified, grid, u_grid, excl = task
    roots = _sample_roots(measure, n, seed, stratified)
    best = -math.inf
    step = max(1, (1 << 21) // n)
    for i in range(0, grid.size, step):
        d = np.abs(grid[i:i + step, None] - roots[None, :])
        ok = d.min(axis=1) > excl
        if not ok.any():
            continue
        dev = np.log(d[ok]).sum(axis=1) / n - u_grid[i:i + step][ok]
        best = max(best, float(dev.max()))
    return best


def run_lemma5(config: ExperimentConfig) -> AggregateReport:
    """``P(sup_z log|p_n(z)|/n - U(z) >= c1)`` with the sup taken over a grid."""
    m = config.measure
    grid = _lemma5_grid(m, config.lemma5_cell)
    with np.errstate(divide="ignore"):
        u = m.potential(grid)
    keep = np.isfinite(u)
    grid, u = grid[keep], u[keep]
    per, timings, rows = {}, {}, []
    for n in config.degrees:
        t0 = time.perf_counter()
        seeds = [derive_seed(config.rng_seed, STAGES["lemma5"], n, t) for t in range(config.trials)]
        tasks = [(m, n, s, config.stratified, grid, u, config.exclusion_radius) for s in seeds]
        sups = np.array(_pmap(_lemma5_task, tasks, config.threads))
        exceed = sups >= config.c1
        p, se = _binom(int(exceed.sum()), sups.size)
        per[n] = {"exceedance_probability": p, "standard_error": se,
                  "median_sup_deviation": float(np.median(sups)),
                  "max_sup_deviation": float(sups.max())}
        for t, (s, v, e) in enumerate(zip(seeds, sups, exceed)):
            rows.append([n, t, s, repr(float(v)), int(e)])
        timings[f"degree_{n}"] = time.perf_counter() - t0
    degs = sorted(per)
    probs = [per[n]["exceedance_probability"] for n in degs]
    nonincreasing = all(b <= a for a, b in zip(probs, probs[1:]))
    fit = None
    pos = [(n, q) for n, q in zip(degs, probs) if q > 0]
    if len(pos) >= 2:
        slope, icpt = np.polyfit([n for n, _ in pos], [math.log(q) for _, q in pos], 1)
        fit = {"c3": float(-slope), "c2": float(math.exp(icpt))}
    extra = {"c1": config.c1, "grid_cell": config.lemma5_cell,
             "exclusion_radius": config.exclusion_radius, "grid_points": int(grid.size),
             "nonincreasing": nonincreasing, "exponential_fit": fit}
    return AggregateReport("lemma5", per, timings, config_hash(config), config.rng_seed, rows,
                           ["degree", "trial_id", "trial_seed", "sup_deviation", "exceeds"], extra)


def _default_probes(measure: MeasureSpec, count: int = 6):
    """Points of ``A`` at distance 0.1 to 0.5 from the support, spread by angle."""
    u0 = float(measure.potential(0j))
    x0, x1, y0, y1 = measure.bbox()
    pad = 0.6
    xs = np.linspace(x0 - pad, x1 + pad, 121)
    ys = np.linspace(y0 - pad, y1 + pad, 121)
    z = (xs[None, :] + 1j * ys[:, None]).ravel()
    d = measure.support_distance(z)
    with np.errstate(divide="ignore"):
        ok = (d >= 0.1) & (d <= 0.5) & (measure.potential(z) - u0 > 1e-6)
    z = z[ok]
    if z.size == 0:
        return []
    c = 0.5 * (x0 + x1) + 0.5j * (y0 + y1)
    ang = np.angle(z - c)
    picks = []
    for a in -np.pi + 2 * np.pi * (np.arange(count) + 0.5) / count:
        k = int(np.argmin(np.abs(np.angle(np.exp(1j * (ang - a))))))
        picks.append(complex(np.round(z[k], 6)))
    return list(dict.fromkeys(picks))


def _lemma6_task(task):
    measure, n, seed, stratified, probes, u_probes, radius = task
    roots = _sample_roots(measure, n, seed, stratified)
    d = np.abs(probes[:, None] - roots[None, :])
    cond = d.min(axis=1) > radius
    with np.errstate(divide="ignore"):
        dev = np.log(d).sum(axis=1) / n - u_probes
    return cond, dev


def run_lemma6(config: ExperimentConfig, strict: bool = True) -> AggregateReport:
    """Lower deviations at fixed probes, conditioned on an empty ball of radius ``c2/sqrt(n)``."""
    m = config.measure
    probes = np.asarray(config.probes if config.probes is not None else _default_probes(m),
                        dtype=complex)
    if probes.size == 0:
        raise ConfigError("no probe points available in A")
    u_p = m.potential(probes)
    per, timings, rows = {}, {}, []
    for n in config.degrees:
        t0 = time.perf_counter()
        seeds = [derive_seed(config.rng_seed, STAGES["lemma6"], n, t) for t in range(config.trials)]
        radius = config.c2 / math.sqrt(n)
        tasks = [(m, n, s, config.stratified, probes, u_p, radius) for s in seeds]
        out = _pmap(_lemma6_task, tasks, config.threads)
        cond = np.array([c for c, _ in out])
        dev = np.array([d for _, d in out])
        entries = {}
        for j, z in enumerate(probes):
            k = int(cond[:, j].sum())
            if k < config.min_conditioning:
                if strict:
                    raise InsufficientConditionalSamples(
                        f"probe {z}: conditioning event held in {k} < {config.min_conditioning} "
                        f"trials at n={n}", z, n, k)
                entries[str(z)] = {"conditioned_trials": k, "insufficient": True}
                continue
            hits = int(np.sum(cond[:, j] & (dev[:, j] <= -config.c1)))
            p, se = _binom(hits, k)
            entries[str(z)] = {"conditioned_trials": k, "probability": p, "standard_error": se,
                               "insufficient": False}
        per[n] = {"ball_radius": radius, "probes": entries}
        for t, s in enumerate(seeds):
            for j, z in enumerate(probes):
                rows.append([n, t, s, repr(float(z.real)), repr(float(z.imag)),
                             int(cond[t, j]), repr(float(dev[t, j]))])
        timings[f"degree_{n}"] = time.perf_counter() - t0
    # envelope c3/n calibrated at the smallest degree (worst probe)
    degs = sorted(per)

    def worst(n):
        ps = [e["probability"] for e in per[n]["probes"].values() if not e["insufficient"]]
        return max(ps) if ps else float("nan")

    n0 = degs[0]
    c3 = worst(n0) * n0
    envelope = {n: {"worst_probability": worst(n), "c3_over_n": c3 / n,
                    "within_5_over_n": bool(worst(n) <= 5.0 / n)} for n in degs}
    extra = {"c1": config.c1, "c2": config.c2, "c3_calibrated": c3, "envelope": envelope,
             "probes": [[complex(z).real, complex(z).imag] for z in probes]}
    return AggregateReport("lemma6", per, timings, config_hash(config), config.rng_seed, rows,
                           ["degree", "trial_id", "trial_seed", "probe_re", "probe_im",
                            "conditioned", "deviation"], extra)


def _has_atoms(measure: MeasureSpec) -> bool:
    return any(isinstance(c, (PointMass, EmpiricalUniform)) for c in measure.components)


def proximity_diagnostic(config: ExperimentConfig, margin: float = 0.05) -> AggregateReport:
    """Median ``log`` distance from solutions to their nearest root, for roots well inside ``A``.

    A root counts as well inside ``A`` when ``U(z_k) - U(0) > margin``.  Measures
    with atoms keep every solution and are flagged as not expected to show
    exponential proximity.
    """
    m = config.measure
    u0 = float(m.potential(0j))
    atoms = _has_atoms(m)
    per, timings, rows = {}, {}, []
    for n in config.degrees:
        t0 = time.perf_counter()
        if n < 2:
            per[n] = {"count": 0, "median_log_distance": None}
            timings[f"degree_{n}"] = time.perf_counter() - t0
            continue
        seeds, res = _solve_trials(config, "proximity", n)
        logs = []
        for t, (s, r) in enumerate(zip(seeds, res)):
            w = r["solutions"][~r["origin"]]
            roots = r["roots"]
            d = np.abs(w[:, None] - roots[None, :])
            k = d.argmin(axis=1)
            if atoms:
                deep = np.ones(k.size, bool)
            else:
                with np.errstate(divide="ignore"):
                    deep = m.potential(roots[k]) - u0 > margin
            near = r["nearest"][~r["origin"]][deep]
            with np.errstate(divide="ignore"):
                lg = np.log(near)
            logs.append(lg)
            for v in lg:
                rows.append([n, t, s, repr(float(v))])
        lg = np.concatenate(logs) if logs else np.empty(0)
        fin = lg[np.isfinite(lg)]
        per[n] = {"count": int(lg.size),
                  "median_log_distance": float(np.median(fin)) if fin.size else None,
                  "quantiles": {str(q): float(np.quantile(fin, q)) for q in (0.1, 0.25, 0.75, 0.9)}
                  if fin.size else {}}
        timings[f"degree_{n}"] = time.perf_counter() - t0
    med = [(n, per[n]["median_log_distance"]) for n in sorted(per)
           if per[n]["median_log_distance"] is not None]
    slope = float(np.polyfit([a for a, _ in med], [b for _, b in med], 1)[0]) if len(med) >= 2 else None
    extra = {"margin": margin, "slope_per_degree": slope,
             "decreasing": (slope is not None and slope < 0),
             "exponential_proximity_expected": not atoms}
    return AggregateReport("proximity", per, timings, config_hash(config), config.rng_seed, rows,
                           ["degree", "trial_id", "trial_seed", "log_distance"], extra)


def bubble_diagnostic(config: ExperimentConfig) -> AggregateReport:
    """Distance from 0 to the nearest nontrivial solution, per trial and degree."""
    per, timings, rows = {}, {}, []
    for n in config.degrees:
        t0 = time.perf_counter()
        seeds, res = _solve_trials(config, "bubble", n)
        radii = []
        for t, (s, r) in enumerate(zip(seeds, res)):
            w = r["solutions"][~r["origin"]]
            rad = float(np.abs(w).min()) if w.size else float("inf")
            radii.append(rad)
            rows.append([n, t, s, repr(rad)])
        radii = np.array(radii)
        per[n] = {"radii_count": int(radii.size), "median_radius": float(np.median(radii)),
                  "min_radius": float(radii.min()), "max_radius": float(radii.max())}
        timings[f"degree_{n}"] = time.perf_counter() - t0
    meds = [per[n]["median_radius"] for n in sorted(per)]
    extra = {"nonincreasing": all(b <= a for a, b in zip(meds, meds[1:]))}
    return AggregateReport("bubble", per, timings, config_hash(config), config.rng_seed, rows,
                           ["degree", "trial_id", "trial_seed", "bubble_radius"], extra)


RUNNERS = {
    "reproduction": run_reproduction,
    "lemma5": run_lemma5,
    "lemma6": run_lemma6,
    "proximity": proximity_diagnostic,
    "bubble": bubble_diagnostic,
}


def write_outputs(report: AggregateReport, config: ExperimentConfig, out_dir=None) -> dict:
    """Per-trial CSV, aggregate JSON and a manifest naming config hash and seed."""
    out = Path(out_dir or config.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{report.kind}_trials.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(report.trial_header)
        w.writerows(report.trial_rows)
    agg_path = out / f"{report.kind}_aggregate.json"
    agg_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    manifest = {
        "kind": report.kind,
        "config_hash": report.config_hash,
        "rng_seed": report.rng_seed,
        "seed_derivation": "splitmix64 fold over (master, stage, degree, trial)",
        "package_version": __version__,
        "config": _jsonable(config.to_dict()),
        "files": [csv_path.name, agg_path.name],
    }
    man_path = out / f"{report.kind}_manifest.json"
    man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"trials_csv": str(csv_path), "aggregate": str(agg_path), "manifest": str(man_path)}
