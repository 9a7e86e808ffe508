import math

import numpy as np
import pytest

from conftest import line
from mpckclust import EuclideanOracle, ParameterError, clustering_cost, estimate_opt_value, fractional_kz
from mpckclust.fractional import default_repeats, sample_k1
from mpckclust.oracles import brute_opt_integral, lp_opt_fractional_clustering
from mpckclust.verify import normalized_instance


def test_k_equals_n():
    o = line([0, 2, 10, 30])
    y, tr = fractional_kz(o, 4, 1, 2.0)
    assert np.allclose(y, 1) and tr.masses[0] == 4
    assert clustering_cost(o, y, 1).total == 0


def test_two_far_points():
    y, _ = fractional_kz(line([0, 1e6]), 2, 1, 4.0)
    assert np.allclose(y, [1, 1])


def test_sweep_trace_contract(rng):
    for _ in range(30):
        n = int(rng.integers(3, 11))
        k = int(rng.integers(2, 4))
        z = int(rng.integers(1, 3))
        o = normalized_instance(rng, n)
        y, tr = fractional_kz(o, k, z, 2.0)
        assert math.fsum(y) == pytest.approx(k, abs=1e-9)
        assert tr.masses[0] == n and tr.masses[-1] <= 2
        assert tr.masses[tr.ell_star - 1] >= k - 1e-9 and tr.masses[tr.ell_star] <= k + 1e-9
        assert 0 <= tr.alpha <= 1
        assert tr.lambdas == [2.0 ** (l * z) for l in range(tr.L + 1)]
        opt_hat = lp_opt_fractional_clustering(o, k, z).value
        ratio = clustering_cost(o, y, z).total / opt_hat if opt_hat > 0 else 1.0
        assert math.isfinite(ratio)


def test_sweep_errors():
    with pytest.raises(ParameterError):
        fractional_kz(line([0, 2]), 1, 1, 2.0)
    with pytest.raises(ParameterError):
        fractional_kz(line([0, 2]), 3, 1, 2.0)


def test_sample_k1():
    y, cost = sample_k1(line([5]), 1)
    assert y.tolist() == [1] and cost == 0
    y, cost = sample_k1(line([0, 10]), 1)
    assert cost == 10
    assert default_repeats(12) == math.ceil(3 * math.log(12)) + 1


def test_sample_k1_ratio(rng):
    for _ in range(10):
        o = normalized_instance(rng, int(rng.integers(2, 13)))
        _, cost = sample_k1(o, 1, seed=3)
        opt = brute_opt_integral(o, 1, 1).value
        assert opt <= cost <= 4 * opt


def test_value_zero_when_k_equals_n():
    est = estimate_opt_value(line([0, 2, 8]), 3, 1, 2.0)
    assert est.eta == 0


def test_value_upper_bounds_opt(rng):
    for _ in range(15):
        o = normalized_instance(rng, int(rng.integers(3, 11)))
        est = estimate_opt_value(o, 2, 1, 2.0)
        assert brute_opt_integral(o, 2, 1).value <= est.eta
        assert est.eta == pytest.approx(est.alpha_scale * math.fsum(est.per_point))


def test_value_scales_with_z_power(rng):
    o = normalized_instance(rng, 8)
    for z in (1, 2):
        a = estimate_opt_value(o, 2, z, 2.0).eta
        b = estimate_opt_value(EuclideanOracle(o.dataset.scaled(2.0)), 2, z, 2.0).eta
        assert b == pytest.approx(2 ** z * a, rel=1e-9)


def test_value_trace_serializes(rng):
    est = estimate_opt_value(normalized_instance(rng, 6), 2, 1, 2.0, alpha_scale=1.0)
    d = est.to_dict()
    assert d["alpha_scale"] == 1.0 and d["trace"]["k"] == 2
