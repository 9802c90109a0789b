import math

import numpy as np
import pytest

from randpoly import limit_law as L
from randpoly import measures as M
from randpoly import polynomials as P
from randpoly import shifted_solver as S


@pytest.fixture(scope="module")
def pred():
    return L.predicted_measure(M.two_circle())


def test_two_circle_densities(pred):
    m = pred.measure
    # |grad U| = 1/4 on both arcs; on the connectors it varies along the curve
    for i in (0, 3):
        np.testing.assert_allclose(pred.curves[i].density * 2 * math.pi, 0.25, atol=1e-8)
    for i in (1, 2):
        cv = pred.curves[i]
        inner = slice(1, -1)
        g = np.abs(m.gradient(cv.vertices[inner]))
        np.testing.assert_allclose(cv.density[inner] * 2 * math.pi, g, atol=1e-8)
        assert g.min() > 0.49


def test_total_mass_is_one(pred):
    assert abs(pred.curve_mass + pred.a_mass - 1) < 4 * pred.a_mass_se + 1e-3


def test_curve_masses_symmetric(pred):
    cm = pred.curve_masses()
    assert abs(cm[1] - cm[2]) < 1e-9
    assert abs(cm[0] - cm[3]) < 1e-3


def test_argument_increment_point_mass():
    m = M.delta(1.0)
    assert abs(L.argument_increment(m, 2 + 0j, 1 + 1j) - math.pi / 2) < 1e-14


def test_argument_increment_circle_quadrature():
    m = M.unit_circle()
    # outside the circle the argument integral equals arg(z)
    v = L.argument_increment(m, 2 + 0j, 2j)
    assert abs(v - math.pi / 2) < 1e-10


def test_singular_vertex_raised():
    m = M.delta(1.0)
    cv = L.predicted_measure(m).curves[0]
    with pytest.raises(L.SingularVertex):
        L.density_on_curve(m, cv, singular_tol=10.0)


def test_project_to_curve_on_circle():
    cv = L.predicted_measure(M.delta(1.0)).curves[0]
    z = np.array([1 + 1.1 * np.exp(0.7j)])
    t, d = L.project_to_curve(cv, z)
    # arclength coordinate is exact on a circle; the distance is to the polyline
    expect = np.angle((z[0] - 1) / (cv.vertices[0] - 1)) % (2 * math.pi)
    assert abs(t[0] - expect) < 1e-12
    assert abs(d[0] - 0.1) < 1e-3


def test_sample_predicted_lies_on_prediction(pred):
    z = L.sample_predicted(pred, 0, 4000)
    m = pred.measure
    on_support = m.support_distance(z) < 1e-9
    # curve draws lie on the chords between traced vertices
    on_curve = np.abs(m.potential(z) - pred.reference_potential) < 1e-4
    assert np.all(on_support | on_curve)


def test_compare_synthetic_truth_concentrates(pred):
    z = L.sample_predicted(pred, 1, 3000)
    rep = L.compare([z], pred, L.CompareConfig(reference_samples=20000))
    assert rep.mass_fraction_near_support > 0.99
    assert rep.histogram_distance < 0.2


def test_compare_report_json(pred, tmp_path):
    sol = S.solve_shifted(P.from_samples(M.sample(M.two_circle(), 0, 30)))
    rep = L.compare([sol], pred, L.CompareConfig(reference_samples=1000))
    text = rep.to_json(tmp_path / "r.json")
    assert '"bubble_radius"' in text and rep.solution_count == 30
    assert rep.bubble_radius > 0


def test_histogram_csv(pred, tmp_path):
    h, xe, ye = L.predicted_histogram(pred, 0.2, 20000)
    assert abs(h.sum() - 1) < 0.01
    L.write_histogram_csv(tmp_path / "h.csv", h, xe, ye)
    assert (tmp_path / "h.csv").read_text().startswith("x_lo,x_hi,y_lo,y_hi,mass")


def test_flat_region_warns():
    with pytest.warns(RuntimeWarning):
        L.predicted_measure(M.annulus(1.2, 2.0))
