"""``randpoly`` command line: sampling, solving, tracing, limits, unwinding and figures.

Every subcommand reads an optional JSON config (``--config``) and trailing
``key=value`` overrides (dotted keys reach nested tables, e.g.
``solver.tol=1e-10``).  Exit codes: 0 success, 1 numeric failure (a
diagnostic ``error.json`` is written), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import measures as M
from .experiments import RUNNERS, ConfigError, ExperimentConfig, derive_seed, write_outputs
from .limit_law import (CompareConfig, compare, density_on_curve, predicted_histogram,
                        predicted_measure, write_histogram_csv)
from .polynomials import ScaledRootedPolynomial, read_roots_csv, write_roots_csv
from .regions import GridConfig, label_array, trace, write_curves_csv
from .shifted_solver import (DegenerateTarget, NonConvergence, SolverConfig, solve_shifted,
                             validate, write_solutions_csv)
from .svg import Figure, ramp_color
from .unwinding import coefficient_decay, unwind, write_error_profile_csv

__all__ = ["main", "load_config", "resolve_measure", "trial_seed"]

PRESETS = {
    "two_circle": M.two_circle,
    "annulus": lambda r_lo=1.2, r_hi=2.0: M.annulus(r_lo, r_hi),
    "unit_circle": M.unit_circle,
    "delta": M.delta,
    "truncated_gaussian": M.truncated_gaussian,
}

DEFAULTS = {
    "measure": "two_circle",
    "degree": 30,
    "degrees": None,
    "trials": 1,
    "seed": 0,
    "stratified": False,
    "roots": None,
    "cell": 0.02,
    "bounds": None,
    "map_cell": 0.05,
    "tube_radius": 0.05,
    "hist_cell": 0.1,
    "reference_samples": 200_000,
    "error_points": 1024,
    "experiment": "reproduction",
    "c1": 0.2,
    "c2": 0.5,
    "lemma5_cell": 0.05,
    "exclusion_radius": 1e-3,
    "probes": None,
    "min_conditioning": 50,
    "forbidden_radius": None,
    "solver": {},
}

FIGURES = ("fig1-left", "fig1-right", "fig2", "fig3")


class NumericFailure(RuntimeError):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path=None, overrides=(), seed=None) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    doc = {}
    if path:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, val = item.split("=", 1)
        node = doc
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-table")
        node[parts[-1]] = _parse_value(val)
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg.update(doc)
    if seed is not None:
        cfg["seed"] = seed
    bad = set(cfg["solver"]) - {f.name for f in fields(SolverConfig)}
    if bad:
        raise ConfigError(f"unknown solver keys: {sorted(bad)}")
    for key in ("degree", "trials", "seed"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool):
            raise ConfigError(f"{key} must be an integer")
    if cfg["degree"] < 1 or cfg["trials"] < 1:
        raise ConfigError("degree and trials must be >= 1")
    return cfg


def resolve_measure(spec) -> M.MeasureSpec:
    """A preset name, ``{"preset": name, "args": [...]}``, or a components document."""
    try:
        if isinstance(spec, str):
            if spec not in PRESETS:
                raise ConfigError(f"unknown measure preset {spec!r}")
            return PRESETS[spec]()
        if isinstance(spec, dict) and "preset" in spec:
            if spec["preset"] not in PRESETS:
                raise ConfigError(f"unknown measure preset {spec['preset']!r}")
            return PRESETS[spec["preset"]](*spec.get("args", []))
        if isinstance(spec, dict):
            return M.MeasureSpec.from_dict(spec)
    except (M.MeasureError, TypeError) as exc:
        raise ConfigError(f"invalid measure: {exc}") from None
    raise ConfigError("measure must be a preset name or a measure document")


def trial_seed(seed: int, degree: int, trial: int) -> int:
    """Sampling seed of trial ``trial``; stage 0 of the experiment seed derivation."""
    return derive_seed(seed, 0, degree, trial)


def _solver(cfg) -> SolverConfig:
    return SolverConfig(**cfg["solver"])


def _roots_from_config(cfg):
    """Explicit roots (inline list or CSV path) as one trial, else sampled trials."""
    r = cfg["roots"]
    if r is None:
        m = resolve_measure(cfg["measure"])
        return [(t, trial_seed(cfg["seed"], cfg["degree"], t),
                 M.sample(m, trial_seed(cfg["seed"], cfg["degree"], t), cfg["degree"],
                          cfg["stratified"]))
                for t in range(cfg["trials"])]
    if isinstance(r, str):
        return _read_trials_csv(r)
    try:
        arr = np.array([complex(a, b) for a, b in r], dtype=complex)
    except (TypeError, ValueError):
        raise ConfigError("roots must be a CSV path or a list of [re, im] pairs") from None
    if arr.size == 0:
        raise ConfigError("roots list is empty")
    return [(0, None, arr)]


def _read_trials_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read roots file: {exc}") from None
    if not rows:
        raise ConfigError(f"{path}: no roots")
    if "trial_id" not in rows[0]:
        try:
            return [(0, None, read_roots_csv(path))]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    groups = {}
    for row in rows:
        t = int(row["trial_id"])
        seed = row.get("trial_seed")
        groups.setdefault(t, (int(seed) if seed else None, []))[1].append(
            complex(float(row["re"]), float(row["im"])))
    return [(t, s, np.array(z, dtype=complex)) for t, (s, z) in sorted(groups.items())]


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n", encoding="utf-8")


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def _solve_all(trials, cfg):
    out = []
    for t, s, roots in trials:
        p = ScaledRootedPolynomial(roots)
        try:
            sol = solve_shifted(p, None, _solver(cfg))
        except NonConvergence as exc:
            raise NumericFailure(str(exc), {"trial_id": t, "trial_seed": s,
                                            "degree": int(roots.size)}) from exc
        out.append((t, sol, p))
    return out


def _bounds(measure, pad=0.25):
    x0, x1, y0, y1 = measure.bbox()
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    hx, hy = 0.75 * (x1 - x0) + pad, 0.75 * (y1 - y0) + pad
    return cx - hx, cx + hx, cy - hy, cy + hy


def _draw_measure(fig, measure):
    for c in measure.circles():
        fig.ring(c.center, c.radius)


def _draw_curves(fig, curves):
    dens = [cv.density for cv in curves if cv.density is not None]
    hi = max((float(np.nanmax(d)) for d in dens), default=1.0) or 1.0
    for cv in curves:
        level = float(np.nanmean(cv.density)) / hi if cv.density is not None else 1.0
        fig.polyline(cv.vertices, color=ramp_color(level), width=2.5, closed=cv.closed)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_sample(args, cfg) -> int:
    out = _out(args)
    m = resolve_measure(cfg["measure"])
    n, trials = cfg["degree"], cfg["trials"]
    path = out / "roots.csv"
    if trials == 1:
        write_roots_csv(path, M.sample(m, trial_seed(cfg["seed"], n, 0), n, cfg["stratified"]))
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["trial_id", "trial_seed", "re", "im"])
            for t in range(trials):
                s = trial_seed(cfg["seed"], n, t)
                for z in M.sample(m, s, n, cfg["stratified"]):
                    w.writerow([t, s, repr(float(z.real)), repr(float(z.imag))])
    print(path)
    return 0


def cmd_potential_map(args, cfg) -> int:
    out = _out(args)
    m = resolve_measure(cfg["measure"])
    x0, x1, y0, y1 = cfg["bounds"] or _bounds(m)
    h = cfg["map_cell"]
    xs = np.arange(x0, x1 + 0.5 * h, h)
    ys = np.arange(y0, y1 + 0.5 * h, h)
    z = (xs[None, :] + 1j * ys[:, None]).ravel()
    u0 = float(m.potential(0j))
    with np.errstate(divide="ignore"):
        u = m.potential(z)
    labels = label_array(m, z, u0=u0)
    with open(out / "potential_map.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "potential", "potential_minus_reference", "region"])
        for zz, uu, lab in zip(z, u, labels):
            w.writerow([repr(float(zz.real)), repr(float(zz.imag)), repr(float(uu)),
                        repr(float(uu - u0)), lab.value])
    fig = Figure((x0, x1, y0, y1), title="potential regions (A blue, B red)")
    vals = np.array([lab.value for lab in labels])
    fig.scatter(z[vals == "A"], color="#9ecae1", radius=1.2, cls="region-A")
    fig.scatter(z[vals == "B"], color="#d62728", radius=1.5, cls="region-B")
    _draw_measure(fig, m)
    fig.save(out / "potential_map.svg")
    _write_json(out / "potential_map.json", {"reference_potential": u0, "points": int(z.size),
                                            "cell": h})
    return 0


def _grid_cfg(cfg) -> GridConfig:
    return GridConfig(cell=cfg["cell"], bounds=tuple(cfg["bounds"]) if cfg["bounds"] else None)


def cmd_trace(args, cfg) -> int:
    out = _out(args)
    m = resolve_measure(cfg["measure"])
    tr = trace(m, _grid_cfg(cfg))
    for cv in tr.curves:
        try:
            cv.density = density_on_curve(m, cv)
        except ArithmeticError:
            cv.density = None
    write_curves_csv(out / "curves.csv", tr.curves)
    summary = {
        "reference_potential": tr.reference_potential,
        "curves": [{"closed": cv.closed, "vertices": len(cv.vertices), "length": cv.length,
                    "min_grad_norm": float(np.min(cv.grad_norm)),
                    "junction_ends": list(cv.end_junctions)} for cv in tr.curves],
        "flat_regions": [asdict(f) for f in tr.flat_regions],
        "isolated_origin": tr.isolated_origin,
        "empty": not tr.curves,
    }
    _write_json(out / "trace.json", summary)
    fig = Figure(_bounds(m), title="level set U = U(0)")
    _draw_measure(fig, m)
    _draw_curves(fig, tr.curves)
    fig.save(out / "trace.svg")
    return 0


def cmd_solve(args, cfg) -> int:
    out = _out(args)
    results = _solve_all(_roots_from_config(cfg), cfg)
    write_solutions_csv(out / "solutions.csv", results)
    reports = []
    for t, sol, p in results:
        v = validate(sol, p, None, _solver(cfg).tol)
        reports.append({"trial_id": t, "degree": p.degree, "found": v.found, "passed": v.passed,
                        "max_residual_log": float(np.max(v.residual_log)),
                        "iterations": sol.iterations})
    _write_json(out / "solve.json", {"trials": reports})
    if not all(r["passed"] for r in reports):
        raise NumericFailure("validation failed", {"trials": reports})
    return 0


def cmd_limit(args, cfg) -> int:
    out = _out(args)
    m = resolve_measure(cfg["measure"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pred = predicted_measure(m, grid=_grid_cfg(cfg))
    results = _solve_all(_roots_from_config(cfg), cfg)
    cc = CompareConfig(tube_radius=cfg["tube_radius"], hist_cell=cfg["hist_cell"],
                       reference_samples=cfg["reference_samples"])
    rep = compare([sol for _, sol, _ in results], pred, cc)
    doc = rep.to_dict()
    doc.update({"a_mass": pred.a_mass, "curve_mass": pred.curve_mass,
                "curve_masses": pred.curve_masses().tolist(),
                "warnings": [str(w.message) for w in caught]})
    _write_json(out / "limit.json", doc)
    hist, xe, ye = predicted_histogram(pred, cfg["hist_cell"], cfg["reference_samples"])
    write_histogram_csv(out / "predicted_histogram.csv", hist, xe, ye)
    write_curves_csv(out / "curves.csv", pred.curves)
    write_solutions_csv(out / "solutions.csv", results)
    fig = Figure(_bounds(m), title=f"solutions vs predicted limit, n={cfg['degree']}")
    _draw_measure(fig, m)
    fig.scatter(np.concatenate([s.solutions for _, s, _ in results]), radius=1.2)
    _draw_curves(fig, pred.curves)
    fig.save(out / "limit.svg")
    return 0


def cmd_unwind(args, cfg) -> int:
    out = _out(args)
    trials = _roots_from_config(cfg)
    docs = []
    for t, s, roots in trials:
        p = ScaledRootedPolynomial(roots)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                exp = unwind(p, _solver(cfg))
            except NonConvergence as exc:
                raise NumericFailure(str(exc), {"trial_id": t, "layer": getattr(exc, "layer", None)})
        suffix = "" if len(trials) == 1 else f"_{t}"
        err = write_error_profile_csv(out / f"error_profile{suffix}.csv", exp, p,
                                      cfg["error_points"])
        doc = exp.to_dict()
        doc.update({"trial_id": t, "degree": p.degree, "layer_count": exp.layer_count,
                    "max_relative_error": err, "decay": coefficient_decay(exp),
                    "warnings": [str(w.message) for w in caught]})
        _write_json(out / f"unwinding{suffix}.json", doc)
        docs.append(doc)
    return 0


def _experiment_config(args, cfg) -> ExperimentConfig:
    return ExperimentConfig(
        measure=resolve_measure(cfg["measure"]),
        degrees=cfg["degrees"] or [cfg["degree"]],
        trials=cfg["trials"], rng_seed=cfg["seed"], c1=cfg["c1"], c2=cfg["c2"],
        lemma5_cell=cfg["lemma5_cell"], exclusion_radius=cfg["exclusion_radius"],
        tube_radius=cfg["tube_radius"], output_dir=str(args.out), threads=args.threads,
        stratified=cfg["stratified"],
        probes=[complex(a, b) for a, b in cfg["probes"]] if cfg["probes"] else None,
        min_conditioning=cfg["min_conditioning"], forbidden_radius=cfg["forbidden_radius"],
        solver=_solver(cfg))


def cmd_experiment(args, cfg) -> int:
    kind = cfg["experiment"]
    if kind not in RUNNERS:
        raise ConfigError(f"unknown experiment {kind!r}; choose from {sorted(RUNNERS)}")
    ec = _experiment_config(args, cfg)
    try:
        report = RUNNERS[kind](ec)
    except NonConvergence as exc:
        raise NumericFailure(str(exc), {"experiment": kind}) from exc
    paths = write_outputs(report, ec, _out(args))
    if kind == "reproduction":
        n = ec.degrees[-1]
        pts = [complex(float(r[3]), float(r[4])) for r in report.trial_rows if r[0] == n]
        fig = Figure(_bounds(ec.measure), title=f"pooled solutions, n={n}")
        fig.scatter(np.array(pts), radius=1.0)
        fig.save(Path(args.out) / "reproduction.svg")
    print(json.dumps(paths))
    return 0


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def _figure_trials(measure, n, trials, seed, fig_id, stratified, solver):
    out = []
    for t in range(trials):
        s = derive_seed(seed, 100 + fig_id, n, t)
        roots = M.sample(measure, s, n, stratified)
        p = ScaledRootedPolynomial(roots)
        try:
            out.append((t, solve_shifted(p, None, solver), p))
        except NonConvergence as exc:
            raise NumericFailure(str(exc), {"figure": fig_id, "trial_id": t}) from exc
    return out


def _scatter_figure(out, name, measure, results, title, curves=(), bounds=None):
    write_solutions_csv(out / f"{name}.csv", results)
    fig = Figure(bounds or _bounds(measure), title=title)
    _draw_measure(fig, measure)
    _draw_curves(fig, list(curves))
    fig.scatter(np.concatenate([s.solutions for _, s, _ in results]), radius=1.2)
    return fig


def cmd_figures(args, cfg) -> int:
    out = _out(args)
    names = FIGURES if args.name == "all" else (args.name,)
    trials = cfg["trials"] if cfg["trials"] > 1 else 100
    seed, solver = cfg["seed"], _solver(cfg)
    for name in names:
        if name == "fig1-left":
            m = M.truncated_gaussian()
            res = _figure_trials(m, 30, trials, seed, 1, False, solver)
            _scatter_figure(out, name, m, res, f"Gaussian roots, n=30, {trials} trials",
                            bounds=(-3.5, 3.5, -3.5, 3.5)).save(out / f"{name}.svg")
        elif name == "fig1-right":
            m = M.unit_circle()
            res = _figure_trials(m, 20, trials, seed, 2, False, solver)
            _scatter_figure(out, name, m, res, f"unit-circle roots, n=20, {trials} trials",
                            bounds=(-1.6, 1.6, -1.6, 1.6)).save(out / f"{name}.svg")
        elif name == "fig2":
            m = M.two_circle()
            pred = predicted_measure(m, grid=_grid_cfg(cfg))
            write_curves_csv(out / "fig2_curves.csv", pred.curves)
            res = _figure_trials(m, 30, trials, seed, 3, True, solver)
            _scatter_figure(out, name, m, res, f"two circles, n=30 (15+15), {trials} trials",
                            curves=pred.curves).save(out / f"{name}.svg")
        elif name == "fig3":
            m = M.two_circle()
            res = _figure_trials(m, 30, trials, seed, 4, True, solver)
            fig = _scatter_figure(out, name, m, res, f"pooled, n=30, {trials} trials",
                                  bounds=(-1.6, 3.6, -1.6, 1.6))
            fig.save(out / "fig3-pooled.svg")
            t, single, p = res[0]
            write_solutions_csv(out / "fig3-single.csv", [(t, single, p)])
            bubble = float(np.abs(single.nontrivial).min())
            f2 = Figure((-1.6, 3.6, -1.6, 1.6), title="single instance, n=30")
            _draw_measure(f2, m)
            f2.scatter(single.solutions, radius=2.5)
            f2.ring(0j, bubble, color="#d62728", width=1.5, dash="3,2", cls="bubble")
            f2.label(0.05 - 0.15j, f"bubble r={bubble:.3f}", size=10, color="#d62728")
            f2.save(out / "fig3-single.svg")
            _write_json(out / "fig3.json", {"bubble_radius": bubble, "trial_id": t})
        else:
            raise ConfigError(f"unknown figure {name!r}")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "potential-map": cmd_potential_map,
    "trace": cmd_trace,
    "solve": cmd_solve,
    "limit": cmd_limit,
    "unwind": cmd_unwind,
    "experiment": cmd_experiment,
    "figures": cmd_figures,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="experiment worker processes")
    ap = argparse.ArgumentParser(prog="randpoly", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "figures":
            sp.add_argument("name", choices=FIGURES + ("all",))
        sp.add_argument("overrides", nargs="*", metavar="key=value")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    out = Path(args.out)
    try:
        cfg = load_config(args.config, args.overrides, args.seed)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, M.MeasureError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailure, NonConvergence, DegenerateTarget, ArithmeticError) as exc:
        diag = {"command": args.command, "error": type(exc).__name__, "message": str(exc),
                "details": getattr(exc, "details", {})}
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "error.json", diag)
        print(json.dumps(diag, default=_json_default), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
