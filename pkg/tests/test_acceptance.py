"""Acceptance criteria 1 to 10.

Reference values come from independent oracles: closed forms derived by hand,
scipy quadrature, or analytic roots.  Runtime budgets are asserted too.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate, optimize

from randpoly import experiments as E
from randpoly import limit_law as L
from randpoly import measures as M
from randpoly import polynomials as P
from randpoly import regions as R
from randpoly import shifted_solver as S
from randpoly import unwinding as U


@pytest.fixture(scope="module")
def two_circle():
    return M.two_circle()


@pytest.fixture(scope="module")
def two_circle_pred(two_circle):
    return L.predicted_measure(two_circle)


def _circle_potential_quad(z, center, radius=1.0):
    f = lambda t: math.log(abs(center + radius * complex(math.cos(t), math.sin(t)) - z))
    v, _ = integrate.quad(f, 0, 2 * math.pi, limit=200, epsabs=1e-13, epsrel=1e-13)
    return v / (2 * math.pi)


# -- 1 ----------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_two_circle_reference_potential(two_circle):
    t0 = time.perf_counter()
    assert abs(two_circle.reference_potential() - 0.5 * math.log(2)) < 1e-9
    assert time.perf_counter() - t0 < 1.0


def _region_probes(rng, which, count=20):
    out = []
    while len(out) < count:
        z = complex(rng.uniform(-2, 4), rng.uniform(-2, 2))
        in_left, in_right = abs(z) < 1, abs(z - 2) < 1
        if min(abs(abs(z) - 1), abs(abs(z - 2) - 1)) < 1e-3:
            continue
        region = "left" if in_left else "right" if in_right else "outside"
        if region == which:
            out.append(z)
    return np.array(out)


@pytest.mark.criterion(1)
@pytest.mark.parametrize("region", ["left", "right", "outside"])
def test_two_circle_piecewise_potential(two_circle, region):
    t0 = time.perf_counter()
    z = _region_probes(np.random.default_rng(11), region)
    got = two_circle.potential(z)
    closed = 0.5 * (np.log(np.maximum(np.abs(z), 1)) + np.log(np.maximum(np.abs(z - 2), 1)))
    np.testing.assert_allclose(got, closed, atol=1e-9, rtol=0)
    quad = [0.5 * (_circle_potential_quad(w, 0) + _circle_potential_quad(w, 2)) for w in z]
    np.testing.assert_allclose(got, quad, atol=1e-9, rtol=0)
    assert time.perf_counter() - t0 < 1.0


# -- 2 ----------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_point_mass_exact_solutions():
    t0 = time.perf_counter()
    p = P.from_samples(np.ones(40))
    sol = S.solve_shifted(p)
    exact = 1 + np.exp(1j * np.pi * np.arange(40) / 20)
    d = np.abs(sol.solutions[:, None] - exact[None, :])
    assert d.min(axis=1).max() < 1e-8
    assert d.min(axis=0).max() < 1e-8
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(2)
def test_point_mass_density_and_gaps():
    t0 = time.perf_counter()
    m = M.delta(1.0)
    pred = L.predicted_measure(m)
    assert len(pred.curves) == 1
    cv = pred.curves[0]
    np.testing.assert_allclose(cv.density, 1 / (2 * math.pi), atol=1e-10, rtol=0)
    sol = S.solve_shifted(P.from_samples(np.ones(40)))
    rep = L.compare([sol], pred, L.CompareConfig(tube_radius=0.05, reference_samples=1000))
    g = np.array(rep.spacing_normalized_gaps)
    assert g.size >= 38
    np.testing.assert_allclose(g, 1.0, atol=1e-8, rtol=0)
    assert time.perf_counter() - t0 < 1.0


# -- 3 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def annulus_reproduction():
    t0 = time.perf_counter()
    cfg = E.ExperimentConfig(measure=M.annulus(1.2, 2.0), degrees=[100], trials=100,
                             rng_seed=0, threads=2)
    rep = E.run_reproduction(cfg)
    return rep.per_degree[100], time.perf_counter() - t0


@pytest.mark.criterion(3)
def test_annulus_radial_ks(annulus_reproduction):
    stats, elapsed = annulus_reproduction
    assert elapsed < 120
    assert stats["ks_distance"] < 0.05, stats


@pytest.mark.criterion(3)
def test_annulus_unit_disk_fraction(annulus_reproduction):
    stats, _ = annulus_reproduction
    assert stats["unit_disk_fraction"] < 0.005, stats


# -- 4 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def two_circle_trials(two_circle):
    t0 = time.perf_counter()
    sols = [S.solve_shifted(P.from_samples(M.sample(two_circle, 1000 + k, 30)))
            for k in range(100)]
    return sols, time.perf_counter() - t0


@pytest.mark.criterion(4)
def test_two_circle_tube_mass(two_circle_pred, two_circle_trials):
    sols, elapsed = two_circle_trials
    t0 = time.perf_counter()
    nontrivial = [s.nontrivial for s in sols]
    rep = L.compare(nontrivial, two_circle_pred,
                    L.CompareConfig(tube_radius=0.05, reference_samples=10000))
    assert elapsed + time.perf_counter() - t0 < 120
    assert rep.solution_count == 29 * 100
    assert rep.mass_fraction_near_support >= 0.9, rep.to_dict()


def _real_axis_crossings(measure, curves):
    u0 = measure.reference_potential()
    f = lambda x: float(measure.potential(complex(x, 0))) - u0
    xs = []
    for cv in curves:
        v = cv.vertices
        if cv.closed:
            v = np.r_[v, v[:1]]
        im = v.imag
        for i in np.flatnonzero((im[:-1] == 0) | (np.sign(im[:-1]) * np.sign(im[1:]) < 0)):
            a, b = v[i], v[i + 1]
            x = a.real if a.imag == 0 else a.real - a.imag * (b.real - a.real) / (b.imag - a.imag)
            h = 0.02
            if f(x - h) * f(x + h) < 0:
                x = optimize.brentq(f, x - h, x + h, xtol=1e-14, rtol=1e-15)
            xs.append(x)
    return np.unique(np.round(xs, 12))


@pytest.mark.criterion(4)
def test_level_curve_crosses_at_one_plus_minus_sqrt3(two_circle, two_circle_pred):
    xs = _real_axis_crossings(two_circle, two_circle_pred.curves)
    for target in (1 - math.sqrt(3), 1 + math.sqrt(3)):
        assert np.min(np.abs(xs - target)) < 1e-6, (target, xs)


@pytest.mark.criterion(4)
def test_level_curve_real_axis_crossings_at_zero_and_two(two_circle, two_circle_pred):
    xs = _real_axis_crossings(two_circle, two_circle_pred.curves)
    assert xs.size == 2
    np.testing.assert_allclose(np.sort(xs), [0.0, 2.0], atol=1e-6)


# -- 5 ----------------------------------------------------------------------


@pytest.mark.criterion(5)
def test_outer_lobe_spacing(two_circle, two_circle_pred):
    t0 = time.perf_counter()
    curves = two_circle_pred.curves
    # outer lobe: the branch of |z||z-2| = 2 outside both disks with Im > 0
    upper = [i for i, cv in enumerate(curves)
             if cv.vertices.imag.mean() > 0.5 and np.all(np.abs(cv.vertices) >= 1 - 1e-9)
             and np.all(np.abs(cv.vertices - 2) >= 1 - 1e-9)]
    assert len(upper) == 1
    cv = curves[upper[0]]
    np.testing.assert_allclose(np.abs(cv.vertices) * np.abs(cv.vertices - 2), 2, atol=1e-9)
    sol = S.solve_shifted(P.from_samples(M.sample(two_circle, 0, 400)))
    rep = L.compare([sol], two_circle_pred,
                    L.CompareConfig(tube_radius=0.1, spacing_components=(upper[0],),
                                    reference_samples=1000))
    g = np.array(rep.spacing_normalized_gaps)
    assert g.size >= 20
    assert np.mean((g >= 0.5) & (g <= 2)) >= 0.8, g
    assert 0.85 <= g.mean() <= 1.15, g.mean()
    assert time.perf_counter() - t0 < 60


# -- 6 ----------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_tangential_cauchy_matches_argument_integral(two_circle):
    tr = R.trace(two_circle)
    assert len(tr.curves) == 4
    worst = 0.0
    count = 0
    for cv in tr.curves:
        ad = L.argument_derivative(two_circle, cv)
        for i in np.linspace(1, len(cv.vertices) - 2, 50).astype(int):
            fd = L.argument_derivative_fd(two_circle, cv.vertices[i], cv.tangents[i])
            worst = max(worst, abs(fd - ad[i]))
            count += 1
    assert count == 200
    assert worst < 1e-6


@pytest.mark.criterion(6)
@pytest.mark.parametrize("name", ["two_circle", "delta"])
def test_argument_derivative_equals_gradient_norm(name):
    m = M.two_circle() if name == "two_circle" else M.delta(1.0)
    for cv in R.trace(m).curves:
        ad = np.abs(L.argument_derivative(m, cv))
        g = np.abs(cv.gradients) if cv.gradients is not None else np.abs(m.gradient(cv.vertices))
        np.testing.assert_allclose(ad, g, atol=1e-8, rtol=0)
        np.testing.assert_allclose(cv.grad_norm, g, atol=1e-8, rtol=0)


# -- 7 ----------------------------------------------------------------------


@pytest.mark.criterion(7)
def test_unwinding_reconstruction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    z = np.exp(2j * np.pi * np.arange(1024) / 1024)
    worst = 0.0
    for k in range(50):
        n = int(rng.integers(5, 31))
        roots = rng.normal(size=n) + 1j * rng.normal(size=n)
        p = P.from_samples(roots)
        exp = U.unwind(p)
        ref = p(z)
        err = np.abs(U.reconstruct(exp, z) - ref).max() / np.abs(ref).max()
        worst = max(worst, err)
        assert exp.layer_count <= n
    assert worst < 1e-6
    assert time.perf_counter() - t0 < 120


# -- 8 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def outside_disk_report():
    t0 = time.perf_counter()
    rep = U.corollary_check(M.annulus(1.5, 2.5), n=100, trials=100, rng_seed=0)
    return rep, time.perf_counter() - t0


@pytest.mark.criterion(8)
def test_outside_disk_inside_fraction(outside_disk_report):
    rep, elapsed = outside_disk_report
    assert elapsed < 120
    assert rep.inside_disk_fraction < 0.01


@pytest.mark.criterion(8)
def test_outside_disk_radial_ks(outside_disk_report):
    rep, _ = outside_disk_report
    assert rep.ks_distance < 0.05, rep.ks_distance


# -- 9 ----------------------------------------------------------------------


@pytest.mark.criterion(9)
def test_upper_deviation_nonincreasing(two_circle):
    t0 = time.perf_counter()
    cfg = E.ExperimentConfig(measure=two_circle, degrees=[25, 50, 100, 200], trials=500,
                             c1=0.2, rng_seed=0, threads=4)
    rep = E.run_lemma5(cfg)
    probs = [rep.per_degree[n]["exceedance_probability"] for n in cfg.degrees]
    assert all(b <= a for a, b in zip(probs, probs[1:])), probs
    assert rep.extra["nonincreasing"]
    assert all(rep.per_degree[n]["standard_error"] >= 0 for n in cfg.degrees)
    assert time.perf_counter() - t0 < 300


# -- 10 ---------------------------------------------------------------------


@pytest.mark.criterion(10)
@pytest.mark.parametrize("measure", [M.two_circle(), M.annulus(1.2, 2.0),
                                     M.truncated_gaussian(), M.delta(1 + 1j)],
                         ids=["two_circle", "annulus", "gaussian", "delta"])
def test_gradient_matches_finite_differences(measure):
    rng = np.random.default_rng(3)
    z = rng.uniform(-3, 4, 200) + 1j * rng.uniform(-3, 3, 200)
    z = z[measure.singular_support_distance(z) > 0.05]
    h = 1e-5
    fx = (measure.potential(z + h) - measure.potential(z - h)) / (2 * h)
    fy = (measure.potential(z + 1j * h) - measure.potential(z - 1j * h)) / (2 * h)
    g = measure.gradient(z)
    rel = np.abs(g - (fx + 1j * fy)) / np.maximum(np.abs(g), 1e-3)
    assert rel.max() < 1e-6


@pytest.mark.criterion(10)
def test_log_eval_matches_direct_product():
    rng = np.random.default_rng(4)
    for n in range(1, 21):
        roots = rng.normal(size=n) + 1j * rng.normal(size=n)
        z = rng.normal(size=30) * 2 + 1j * rng.normal(size=30) * 2
        p = P.from_samples(roots)
        direct = np.prod(z[:, None] - roots[None, :], axis=1)
        got = P.log_eval(p, z).to_complex()
        np.testing.assert_allclose(got, direct, rtol=1e-9, atol=0)


@pytest.mark.criterion(10)
@pytest.mark.parametrize("name", ["two_circle", "annulus", "gaussian", "unit_circle"])
def test_solver_residuals(name):
    m = {"two_circle": M.two_circle(), "annulus": M.annulus(1.2, 2.0),
         "gaussian": M.truncated_gaussian(), "unit_circle": M.unit_circle()}[name]
    for seed, n in [(0, 10), (1, 50), (2, 200)]:
        p = P.from_samples(M.sample(m, seed, n))
        sol = S.solve_shifted(p)
        assert len(sol) == n
        assert np.all(sol.residual_log <= math.log(1e-8))


@pytest.mark.criterion(10)
def test_bit_identical_reruns(tmp_path):
    def run(threads, sub):
        cfg = E.ExperimentConfig(measure=M.two_circle(), degrees=[10, 20], trials=12,
                                 rng_seed=99, threads=threads)
        rep = E.bubble_diagnostic(cfg)
        E.write_outputs(rep, cfg, tmp_path / sub)
        return (tmp_path / sub / "bubble_trials.csv").read_bytes()

    a, b, c = run(1, "a"), run(1, "b"), run(3, "c")
    assert a == b == c
    m = M.annulus(1.2, 2.0)
    cfg = E.ExperimentConfig(measure=m, degrees=[15], trials=6, rng_seed=5)
    E.write_outputs(E.run_reproduction(cfg), cfg, tmp_path / "r1")
    E.write_outputs(E.run_reproduction(cfg), cfg, tmp_path / "r2")
    assert ((tmp_path / "r1" / "reproduction_trials.csv").read_bytes()
            == (tmp_path / "r2" / "reproduction_trials.csv").read_bytes())
