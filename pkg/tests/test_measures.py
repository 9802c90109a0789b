import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from randpoly import measures as M


def _quad_radial_potential(r_lo, r_hi, z):
    area = math.pi * (r_hi ** 2 - r_lo ** 2)
    f = lambda th, r: r * math.log(abs(r * complex(math.cos(th), math.sin(th)) - z)) / area
    v, _ = integrate.dblquad(f, r_lo, r_hi, 0, 2 * math.pi, epsabs=1e-11, epsrel=1e-11)
    return v


def test_unit_circle_potential_is_log_max():
    m = M.unit_circle()
    z = np.array([0, 0.3 + 0.4j, 2j, -3, 1.5 - 1.5j])
    np.testing.assert_allclose(m.potential(z), np.log(np.maximum(np.abs(z), 1)), atol=1e-14)


@pytest.mark.parametrize("z", [0.0, 0.7j, 1.5 + 0.2j, 3 - 1j])
def test_annulus_potential_against_quadrature(z):
    m = M.annulus(1.2, 2.0)
    assert abs(float(m.potential(complex(z))) - _quad_radial_potential(1.2, 2.0, z)) < 1e-8


def test_annulus_potential_constant_in_hole():
    m = M.annulus(1.2, 2.0)
    u = m.potential(np.array([0, 0.5, 1.1j, -0.9 + 0.3j]))
    assert np.ptp(u) < 1e-13


def test_gaussian_potential_against_quadrature():
    m = M.truncated_gaussian(1.0, 3.0)
    comp = m.components[0]
    for z in (0.0, 0.8, 2.5j):
        def f(r):
            ring = math.log(max(r, abs(z)))
            return ring * r * math.exp(-r * r / 2) / comp._norm
        v, _ = integrate.quad(f, 0, 3, points=[abs(z)] if 0 < abs(z) < 3 else None,
                              epsabs=1e-13)
        assert abs(float(m.potential(complex(z))) - v) < 1e-10


def test_point_mass_potential_singular():
    m = M.delta(1.0)
    assert m.potential(1 + 0j) == -np.inf
    with pytest.raises(M.NegativeInfinity):
        M.log_potential(m, 1.0)
    with pytest.raises(M.OnSingularSupport):
        M.cauchy_transform(m, 1.0)


@pytest.mark.parametrize("maker", [M.two_circle, lambda: M.annulus(1.2, 2),
                                   M.truncated_gaussian])
def test_gradient_is_conjugate_cauchy(maker):
    m = maker()
    z = np.array([3.3 + 0.1j, -1.7 + 1j, 0.4 + 2.9j])
    np.testing.assert_allclose(m.gradient(z), np.conj(m.cauchy(z)))


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-3, 5), y=st.floats(-3, 3))
def test_gradient_finite_difference_property(x, y):
    m = M.two_circle()
    z = complex(x, y)
    if float(m.singular_support_distance(z)) < 0.05:
        return
    h = 1e-6
    fx = (m.potential(z + h) - m.potential(z - h)) / (2 * h)
    fy = (m.potential(z + 1j * h) - m.potential(z - 1j * h)) / (2 * h)
    g = complex(m.gradient(z))
    assert abs(g - complex(fx, fy)) <= 1e-6 * max(abs(g), 1e-2)


def test_sampling_reproducible_and_on_support():
    m = M.two_circle()
    a, b = M.sample(m, 7, 500), M.sample(m, 7, 500)
    assert np.array_equal(a, b)
    assert np.allclose(np.minimum(np.abs(np.abs(a) - 1), np.abs(np.abs(a - 2) - 1)), 0,
                       atol=1e-12)


def test_stratified_sampling_counts():
    m = M.two_circle()
    z = M.sample(m, 1, 30, stratified=True)
    assert np.sum(np.abs(np.abs(z) - 1) < 1e-9) == 15


def test_annulus_radial_cdf_matches_samples():
    m = M.annulus(1.2, 2.0)
    r = np.abs(M.sample(m, 3, 20000))
    assert r.min() >= 1.2 and r.max() <= 2.0
    emp = np.mean(r <= 1.6)
    assert abs(emp - float(m.radial_cdf(1.6))) < 0.015
    assert float(m.radial_cdf(1.2)) == 0 and float(m.radial_cdf(2.0)) == pytest.approx(1)


def test_weights_validation():
    with pytest.raises(M.MeasureError):
        M.MeasureSpec((M.UniformCircle(0j, 1.0),), (0.5,))
    with pytest.raises(M.MeasureError):
        M.MeasureSpec(())
    with pytest.raises(M.MeasureError):
        M.MeasureSpec.from_dict({"components": [{"type": "nope"}]})


def test_measure_document_round_trip():
    m = M.two_circle()
    m2 = M.MeasureSpec.from_dict(m.to_dict())
    z = np.array([0.3 + 2j, 4.0])
    np.testing.assert_array_equal(m.potential(z), m2.potential(z))


def test_region_mass_standard_error():
    p, se = M.region_mass(M.two_circle(), lambda z: z.real > 1, 0, 20000)
    assert abs(p - 0.5) < 4 * se + 1e-3
    with pytest.raises(M.MeasureError):
        M.region_mass(M.two_circle(), lambda z: z.real > 1, 0, 10)


def test_radial_cdf_rejects_nonradial():
    with pytest.raises(M.MeasureError):
        M.two_circle().radial_cdf(1.0)
