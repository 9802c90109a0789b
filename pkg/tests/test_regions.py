import math

import numpy as np
import pytest

from randpoly import measures as M
from randpoly import regions as R


@pytest.fixture(scope="module")
def two_circle_trace():
    return R.trace(M.two_circle())


def test_classify_labels():
    m = M.two_circle()
    assert R.classify(m, 0j) == R.RegionLabel.B
    assert R.classify(m, 5 + 0j) == R.RegionLabel.A
    # on the left arc's circle |z - 2| = 2 inside the unit disk about 0 the potential equals U(0)
    z = 2 + 2 * np.exp(1j * 3.0)
    assert R.classify(m, complex(z)) == R.RegionLabel.B
    assert R.classify(m, 0.5 + 0j) == R.RegionLabel.OMEGA


def test_label_array_returns_enum_objects():
    lab = R.label_array(M.two_circle(), np.linspace(-1, 3, 9) + 0.5j)
    assert all(isinstance(x, R.RegionLabel) for x in lab)


def test_reference_potential_rejects_atom_at_origin():
    with pytest.raises(M.NegativeInfinity):
        R.reference_potential(M.delta(0.0))


def test_two_circle_curve_geometry(two_circle_trace):
    m = M.two_circle()
    cs = two_circle_trace.curves
    assert len(cs) == 4
    u0 = m.reference_potential()
    for cv in cs:
        assert not cv.closed
        assert np.max(np.abs(m.potential(cv.vertices) - u0)) < 1e-9
        assert np.all(cv.grad_norm > 0.2)
    left, lower, upper, right = cs
    np.testing.assert_allclose(np.abs(left.vertices - 2), 2, atol=1e-9)
    np.testing.assert_allclose(np.abs(right.vertices), 2, atol=1e-9)
    for conn in (lower, upper):
        np.testing.assert_allclose(np.abs(conn.vertices * (conn.vertices - 2)), 2, atol=1e-9)
    # junctions lie on the support circles at x = 1/4 and x = 7/4
    js = np.concatenate([[cv.vertices[0], cv.vertices[-1]] for cv in cs])
    np.testing.assert_allclose(np.sort(np.unique(np.round(js.real, 9))), [0.25, 1.75], atol=1e-9)
    np.testing.assert_allclose(np.abs(js.imag), math.sqrt(15) / 4, atol=1e-9)


def test_left_arc_length(two_circle_trace):
    left = two_circle_trace.curves[0]
    # arc of |z - 2| = 2 between the junctions 1/4 +- i sqrt(15)/4
    half = math.atan2(math.sqrt(15) / 4, 2 - 0.25)
    assert abs(left.length - 2 * 2 * half) < 1e-6


def test_point_mass_circle_length():
    tr = R.trace(M.delta(1.0))
    assert len(tr.curves) == 1 and tr.curves[0].closed
    assert abs(tr.curves[0].length - 2 * math.pi) < 1e-9


def test_annulus_level_set_is_flat_disk():
    with pytest.raises(R.EmptyLevelSet) as info:
        R.trace_level_set(M.annulus(1.2, 2.0))
    flats = info.value.result.flat_regions
    assert len(flats) == 1 and flats[0].contains_origin
    assert abs(flats[0].equivalent_radius - 1.2) < 0.02


def test_gaussian_origin_isolated():
    tr = R.trace(M.truncated_gaussian())
    assert tr.isolated_origin and not tr.curves


def test_segment_arclengths_exact_on_circle():
    th = np.linspace(0, 1, 11)
    v = 3 * np.exp(1j * th)
    np.testing.assert_allclose(R.segment_arclengths(v, False), 0.3, atol=1e-13)


def test_vertex_tangents_on_circle():
    th = np.linspace(0.2, 2.0, 17)
    t = R.vertex_tangents(np.exp(1j * th), False)
    np.testing.assert_allclose(t, 1j * np.exp(1j * th), atol=1e-12)


def test_curves_csv(tmp_path, two_circle_trace):
    R.write_curves_csv(tmp_path / "c.csv", two_circle_trace.curves)
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0].split(",") == ["component_id", "vertex_index", "re", "im", "cum_arclength",
                                  "grad_norm", "density", "singular_flag"]
    assert len(rows) == 1 + sum(len(cv.vertices) for cv in two_circle_trace.curves)
