import math

import numpy as np
import pytest

from conftest import line
from mpckclust import (Dataset, DerivedConstants, EuclideanOracle, ParameterError, PreconditionError,
                       SolverParams, mp_beta, mp_level_variant, radius_profile, solve_radius)
from mpckclust.facility import RadiusProfile, infeasible_assignment, level_profile, phi, radii_for_scale
from mpckclust.lemmas import (additive_error_bound, certificate_from_profile, certificate_premises,
                              check_structural_properties, dual_vector, dual_violation)
from mpckclust.verify import counterexample, normalized_instance, random_points


def test_derived_constants():
    c = DerivedConstants(2, 4.0)
    assert c.beta_star == 1 / 8
    assert c.gamma_star == 2 ** 10
    assert c.beta_robust == 1 / 8 / 4 ** 4
    for z in (1, 2, 3):
        for g in (1.0, 2.0, 8.0):
            c = DerivedConstants(z, g)
            assert c.beta_robust <= c.beta_star < 1 and c.gamma_star >= 8


def test_solver_params_validation():
    with pytest.raises(ParameterError):
        SolverParams(1, 1.0, 1.0)
    with pytest.raises(ParameterError):
        SolverParams(1, 0.0, 0.5)
    with pytest.raises(ParameterError):
        SolverParams(0, 1.0, 0.5)


def test_solve_radius_examples():
    assert solve_radius(0, line([0]), SolverParams(1, 1.0, 0.5)) == 1
    assert solve_radius(0, line([0, 2]), SolverParams(1, 1.0, 0.25)) == pytest.approx(0.75)
    # z = 2, beta = lam = 1 lies outside the solver's (0, 1) range; solve it directly
    pts = [0.0, 0.5] + [math.sqrt(5 / 8)] * 30
    assert radii_for_scale(line(pts), 1.0, 2, 1.0)[0] == pytest.approx(5 / 8, abs=1e-12)


def test_mp_beta_examples():
    assert mp_beta(line([0]), SolverParams(1, 5.0, 0.5)).tolist() == [1]
    assert np.allclose(mp_beta(line([0, 2]), SolverParams(1, 1.0, 0.25)), [0.75, 0.75])
    far = line([0, 100, 200, 300])
    assert np.array_equal(mp_beta(far, SolverParams(1, 1.0, 0.5)), np.ones(4))


def test_residual_and_bounds(rng):
    for _ in range(20):
        o = EuclideanOracle(Dataset(random_points(rng, int(rng.integers(2, 15)), 2)))
        p = SolverParams(int(rng.integers(1, 4)), float(2 ** rng.uniform(-2, 6)), 0.1)
        prof = radius_profile(o, p)
        assert np.all(np.abs(phi(o, prof.radii, p.lam, p.z, p.beta)) <= 1e-9 * p.lam)
        assert np.all(prof.radii <= p.lam * (1 + 1e-12))
        assert np.all(prof.y > 0)


def test_level_variant_examples():
    y, lev = mp_level_variant(line([0, 2]), SolverParams.robust(1, 1.0, 2.0))
    assert np.allclose(y, [9 / 16, 9 / 16])
    assert lev.counts[:, 0].tolist() == [1, 1] and lev.counts[:, -1].tolist() == [2, 2]
    y, _ = mp_level_variant(line([0]), SolverParams.robust(1, 1.0, 2.0))
    assert y.tolist() == [1]


def test_level_variant_needs_normalized():
    with pytest.raises(PreconditionError):
        mp_level_variant(line([0, 1]), SolverParams.robust(1, 1.0, 2.0))


def test_level_counts_monotone(rng):
    o = normalized_instance(rng, 12)
    lev = level_profile(o, 2.0)
    assert np.all(np.diff(lev.counts, axis=1) >= 0)
    assert np.all(lev.counts[:, 0] == 1) and np.all(lev.counts[:, -1] == 12)


def test_level_variant_sandwich(rng):
    for _ in range(20):
        o = normalized_instance(rng, int(rng.integers(2, 13)))
        z, lam, gamma = int(rng.integers(1, 3)), float(2 ** rng.uniform(0, 6)), 2.0
        params = SolverParams.robust(z, lam, gamma)
        y, _ = mp_level_variant(o, params)
        lo = radii_for_scale(o, lam, z, params.beta)
        hi = radii_for_scale(o, lam, z, DerivedConstants(z).beta_star)
        assert np.all(lo <= y * lam * (1 + 1e-9)) and np.all(y * lam <= hi * (1 + 1e-9))


def test_infeasible_assignment_rows_sum_to_one(rng):
    o = EuclideanOracle(Dataset(rng.normal(size=(10, 2))))
    prof = radius_profile(o, SolverParams(2, 3.0, 0.125))
    x = infeasible_assignment(prof, o)
    assert np.allclose(x.row_sums(), 1, atol=1e-9)
    single = infeasible_assignment(radius_profile(line([0]), SolverParams(1, 1.0, 0.5)), line([0]))
    assert single.to_dense().tolist() == [[1.0]]


@pytest.mark.parametrize("n", [20, 100])
def test_counterexample(n):
    c = counterexample(n)
    assert c["r_p"] == pytest.approx(5 / 8, abs=1e-12)
    assert c["x_pq"] == pytest.approx(3 / 8, abs=1e-12)
    assert c["violates"]


def test_structural_properties_pass_and_single_point(rng):
    rep = check_structural_properties(line([0]), 1.0, 1, [1 / 8, 1 / 4])
    assert rep.passed
    for _ in range(10):
        z = int(rng.integers(1, 3))
        o = EuclideanOracle(Dataset(random_points(rng, int(rng.integers(2, 16)), 2)))
        rep = check_structural_properties(o, float(2 ** rng.uniform(0, 6)), z,
                                          [1 / 8, DerivedConstants(z).beta_star])
        assert rep.passed, rep.failures()


def test_structural_properties_catch_corruption(rng):
    o = EuclideanOracle(Dataset(random_points(rng, 10, 2)))
    r = radii_for_scale(o, 4.0, 1, 1 / 8).copy()
    r[3] /= 2
    rep = check_structural_properties(o, 4.0, 1, [1 / 8], profiles={1 / 8: r})
    assert not rep.entries["radius_residual"].passed or not rep.entries["local_density"].passed


def test_certificate_and_duality(rng):
    o = normalized_instance(rng, 9)
    z, lam = 1, 8.0
    prof = radius_profile(o, SolverParams.star(z, lam))
    cert = certificate_from_profile(o, prof)
    prem = certificate_premises(o, cert, z)
    assert prem["cover"] >= -1e-9 and prem["row_sum"] <= 1e-9 and prem["support"] >= 0
    assert additive_error_bound(o, cert, z) >= 0
    v = dual_vector(o, lam, z, DerivedConstants(z).beta_star)
    assert dual_violation(o, v, lam, z) <= 1e-9


def test_radius_profile_json_roundtrip():
    prof = radius_profile(line([0, 2, 7]), SolverParams(1, 2.0, 0.25))
    back = RadiusProfile.from_json(prof.to_json())
    assert back.beta == prof.beta and np.array_equal(back.radii, prof.radii)
