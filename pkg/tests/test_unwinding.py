import warnings

import numpy as np
import pytest

from randpoly import measures as M
from randpoly import polynomials as P
from randpoly import unwinding as U


def test_linear_hand_computation():
    e = U.unwind(P.from_samples([0.5]))
    assert e.to_dict()["coefficients"] == [[1.0, 0.0], [-0.5, 0.0]]
    assert e.layer_count == 1 and e.exact


def test_double_root_at_origin_is_blaschke_square():
    e = U.unwind(P.from_samples([0, 0]))
    assert e.layer_count == 0
    assert abs(U.reconstruct(e, 1j) - (-1)) < 1e-15


def test_blaschke_reflect_preserves_modulus_on_circle():
    p = P.from_samples([0.3 + 0.1j, 2.0, -0.5j])
    inside, g = U.blaschke_reflect(p)
    z = np.exp(1j * np.linspace(0, 6, 50))
    np.testing.assert_allclose(np.abs(p(z)), np.abs(g(z)), rtol=1e-13)
    assert inside.size == 2 and np.all(np.abs(g.roots) > 1)


def test_boundary_root_warns():
    with pytest.warns(RuntimeWarning):
        U.blaschke_reflect(P.from_samples([1.0, 0.2]))


def test_degrees_strictly_decrease_and_norm_bound():
    rng = np.random.default_rng(2)
    z = np.exp(2j * np.pi * np.arange(512) / 512)
    for _ in range(10):
        n = int(rng.integers(3, 15))
        p = P.from_samples(rng.normal(size=n) + 1j * rng.normal(size=n))
        e = U.unwind(p)
        assert all(b < a for a, b in zip(e.step_degrees[1:], e.step_degrees[2:]))
        energy = np.mean(np.abs(p(z)) ** 2)
        assert np.sum(np.abs(e.coefficients) ** 2) <= energy * (1 + 1e-9)


def test_expansion_round_trip_json(tmp_path):
    e = U.unwind(P.from_samples([0.5, 1.5j, -0.2]))
    e.to_json(tmp_path / "u.json")
    import json
    e2 = U.UnwindingExpansion.from_dict(json.loads((tmp_path / "u.json").read_text()))
    z = np.exp(1j * np.linspace(0, 6, 9))
    np.testing.assert_allclose(U.reconstruct(e, z), U.reconstruct(e2, z))


def test_error_profile_csv(tmp_path):
    p = P.from_samples([0.5, 2, 0.1j])
    err = U.write_error_profile_csv(tmp_path / "e.csv", U.unwind(p), p, 64)
    assert err < 1e-12
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 65


def test_corollary_preconditions():
    with pytest.raises(U.PreconditionError):
        U.corollary_check(M.two_circle(), 10, 2, 0)
    with pytest.raises(U.PreconditionError):
        U.corollary_check(M.annulus(0.5, 2.0), 10, 2, 0)


def test_corollary_small_run():
    rep = U.corollary_check(M.annulus(1.5, 2.5), 30, 10, 0)
    assert rep.nontrivial_count == 290
    assert 0 <= rep.inside_disk_fraction < 0.05


def test_two_circle_unwinding_with_boundary_roots():
    p = P.from_samples(M.sample(M.two_circle(), 3, 12))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        e = U.unwind(p)
    z = np.exp(2j * np.pi * np.arange(256) / 256)
    ref = p(z)
    assert np.abs(U.reconstruct(e, z) - ref).max() / np.abs(ref).max() < 1e-8
