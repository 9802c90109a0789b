import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randpoly import polynomials as P

cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(roots=st.lists(cplx, min_size=1, max_size=20), z=cplx)
def test_log_eval_matches_product(roots, z):
    p = P.from_samples(roots)
    direct = np.prod([z - r for r in roots])
    if abs(direct) < 1e-200:
        return
    got = P.log_eval(p, z).to_complex()
    assert abs(got - direct) <= 1e-9 * abs(direct)


def test_log_eval_at_root_is_minus_inf():
    p = P.from_samples([1, 2j])
    assert P.log_eval(p, 2j).log_abs == -math.inf


def test_large_degree_does_not_overflow():
    p = P.from_samples(np.full(5000, 10.0))
    lv = P.log_eval(p, 0j)
    assert math.isfinite(lv.log_abs) and abs(lv.log_abs - 5000 * math.log(10)) < 1e-9


def test_quarter_turn_phases_are_exact():
    assert P.LogComplex(0.0, math.pi / 2).to_complex() == 1j
    assert P.LogComplex(math.log(0.5), math.pi).to_complex() == -0.5


@pytest.mark.parametrize("a,b", [(1e-12, 1e-12), (-3e-9, 2e-10), (0.5, -2.0), (0.0, 7.0)])
def test_expm1_log_against_high_precision(a, b):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    ref = complex(mpmath.exp(mpmath.mpc(a, b)) - 1)
    d = complex(P.expm1_log(a, b))
    assert abs(d - ref) <= 4e-16 * abs(ref)


def test_log_derivative_ratio():
    p = P.from_samples([1, -1, 2j])
    z = 0.3 + 0.1j
    assert abs(P.log_derivative_ratio(p, z) - sum(1 / (z - r) for r in [1, -1, 2j])) < 1e-14
    with pytest.raises(P.AtRoot):
        P.log_derivative_ratio(p, 1.0)


def test_roots_csv_round_trip(tmp_path):
    r = np.random.default_rng(0).normal(size=7) + 1j * np.random.default_rng(1).normal(size=7)
    P.write_roots_csv(tmp_path / "r.csv", r)
    assert np.array_equal(P.read_roots_csv(tmp_path / "r.csv"), r)


def test_empty_roots_rejected():
    with pytest.raises(ValueError):
        P.from_samples([])
