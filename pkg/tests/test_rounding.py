import numpy as np
import pytest

from conftest import line
from mpckclust import (Dataset, EuclideanOracle, ParameterError, PreconditionError, PrimitiveBackend,
                       estimate_costs, final_round, fractional_kz, monotone_ann, normalize_dataset,
                       partial_round, round_pipeline, solve_kz, sparsify)
from mpckclust.costs import center_cost, indicator
from mpckclust.oracles import brute_opt_integral
from mpckclust.rounding import PartialSolution, cost_levels, pair_levels
from mpckclust.runtime import LocalRuntime
from mpckclust.verify import PropertyReport, check_pipeline, normalized_instance

# cost / OPT on the 1-D instance {0, 1, 10} with k = 2, first measured run
TINY_BASELINE = {1: 11.0, 2: 101.0}


def half_open(n, F, H, k):
    yt = np.zeros(n)
    yt[list(F)] = 1.0
    yt[list(H)] = 0.5
    sup = np.sort(np.concatenate([np.asarray(F, dtype=int), np.asarray(H, dtype=int)]))
    return yt, PartialSolution(yt, sup, sup, np.zeros(sup.size), yt.copy(), k)


def test_sparsify_far_points_keep_own_weight():
    # zero cost everywhere puts every point at level 0 with tau_0 = 4 gamma / n = 2
    o = line([0, 1e4, 2e4, 3e4])
    y = np.ones(4)
    costs = estimate_costs(o, y, 2.0, 1)
    w, tr = sparsify(o, y, costs, 2.0)
    assert w.tolist() == [1, 1, 1, 1]
    assert sorted(np.concatenate(tr.R).tolist()) == [0, 1, 2, 3]


def test_sparsify_tight_cluster_collapses():
    o = line([0, 2, 4, 6, 8])
    y = np.full(5, 0.4)
    w, _ = sparsify(o, y, estimate_costs(o, y, 2.0, 1), 2.0)
    assert w.sum() == 5 and np.count_nonzero(w) == 1


def test_sparsify_gamma_mismatch():
    o = line([0, 2])
    costs = estimate_costs(o, [1, 1], 2.0, 1)
    with pytest.raises(ParameterError):
        sparsify(o, [1, 1], costs, 4.0)


def test_cost_levels_boundaries():
    n, g = 4, 2.0
    t = np.array([0.25, 0.26, 1.0, 1.01, 4.0])
    assert cost_levels(t, n, g, 1).tolist() == [0, 1, 1, 2, 2]


def test_partial_round_all_full_and_all_half():
    o = line([0, 100, 200, 300])
    p = partial_round(o, [1, 1, 0, 0], [2, 2, 0, 0], 2, 2.0, 1)
    assert p.y_tilde.tolist() == [1, 1, 0, 0]
    p = partial_round(o, [0.5] * 4, [1, 1, 1, 1], 2, 2.0, 1)
    assert p.y_tilde.tolist() == [0.5] * 4


def test_partial_round_moves_mass_and_orders():
    o = line([0, 2, 100, 130])
    y = np.array([0.6, 0.4, 0.5, 0.5])
    p = partial_round(o, y, [2, 0, 1, 1], 2, 2.0, 1)
    assert p.y_moved.tolist() == [1.0, 0.0, 0.5, 0.5]
    # w * hdist: 0 -> 2*100, 2 -> 30, 3 -> 30; one fully open slot (2k - m = 1)
    assert p.order.tolist() == [0, 2, 3]
    assert p.y_tilde.tolist() == [1.0, 0.0, 0.5, 0.5]


def test_partial_round_mass_check():
    with pytest.raises(ParameterError):
        partial_round(line([0, 2]), [0.5, 0.5], [1, 1], 2, 2.0, 1)


def test_monotone_ann_examples():
    h, d = monotone_ann(line([0, 1]), [0, 1])
    assert h.tolist() == [1, 0]
    h, d = monotone_ann(line([0, 1, 3]), [0, 1, 2])
    assert h.tolist() == [1, 0, 1]
    assert d[2] >= d[1]
    with pytest.raises(ParameterError):
        monotone_ann(line([0, 1]), [0])


def test_monotone_ann_claims(rng):
    for _ in range(100):
        o = normalized_instance(rng, int(rng.integers(2, 16)))
        H = np.arange(o.n)
        h, hd = monotone_ann(o, H)
        D = o.matrix().copy()
        np.fill_diagonal(D, np.inf)
        assert np.all(h != H)
        assert np.all(hd <= D.min(axis=1) * (1 + 1e-12))
        assert np.all(hd[h] <= hd)


def test_final_round_examples():
    o = line([0, 2, 50])
    C, tr = final_round(o, [1, 1, 1], half_open(3, [2], [], 1)[1], 2.0)
    assert C.tolist() == [2] and tr.H.size == 0
    C, tr = final_round(o, [1, 1, 0], half_open(3, [], [0, 1], 1)[1], 2.0)
    assert C.size == 1 and tr.level.tolist() == [1, 1]


def test_final_round_preconditions():
    with pytest.raises(PreconditionError):
        final_round(line([0, 2, 9]), [1, 1, 1], half_open(3, [0, 1], [2], 2)[1], 2.0)
    with pytest.raises(PreconditionError):
        final_round(line([0, 1]), [1, 1], half_open(2, [], [0, 1], 1)[1], 2.0)


def test_pair_levels():
    assert pair_levels(np.array([2.0, 2.5, 4.0, 4.0001, 1024.0])).tolist() == [1, 2, 2, 3, 10]


def test_pipeline_contracts(rng):
    rep = PropertyReport()
    for i in range(40):
        n = int(rng.integers(3, 21))
        k = int(rng.integers(2, n))
        z = int(rng.integers(1, 3))
        gamma = (2.0, 4.0, 8.0)[i % 3]
        o = normalized_instance(rng, n)
        y, _ = fractional_kz(o, k, z, gamma)
        C = check_pipeline(o, y, k, z, gamma, rep)
        assert C.size <= k
    assert rep.passed, rep.failures()


def test_pipeline_k_equals_n():
    o = line([0, 2, 6])
    C, _ = round_pipeline(o, np.ones(3), 3, 2.0, 1)
    assert C.tolist() == [0, 1, 2] and center_cost(o, C, 1) == 0


def test_pipeline_integral_input(rng):
    o = normalized_instance(rng, 12)
    y = indicator(12, [0, 5, 9])
    C, _ = round_pipeline(o, y, 3, 2.0, 1)
    assert 1 <= C.size <= 3
    assert np.isfinite(center_cost(o, C, 1))


@pytest.mark.parametrize("z", [1, 2])
def test_solve_tiny_instance(z):
    P = Dataset([0.0, 1.0, 10.0])
    Pn, scale, _ = normalize_dataset(P)
    res = solve_kz(EuclideanOracle(Pn), 2, z, 2.0)
    opt = brute_opt_integral(EuclideanOracle(P), 2, z).value
    assert opt == 1
    assert res.centers.size <= 2
    assert res.cost / scale ** z / opt <= TINY_BASELINE[z] * (1 + 1e-9)


def test_solve_k_equals_n_and_k1():
    o = line([0, 2, 8])
    assert solve_kz(o, 3, 1, 2.0).cost == 0
    res = solve_kz(o, 1, 1, 2.0, seed=2)
    assert res.centers.size == 1
    with pytest.raises(ParameterError):
        solve_kz(o, 4, 1, 2.0)


def test_solve_deterministic_and_charges(rng):
    o = normalized_instance(rng, 15)
    a = solve_kz(o, 3, 1, 4.0, seed=5)
    b = solve_kz(o, 3, 1, 4.0, seed=5)
    assert np.array_equal(a.centers, b.centers) and a.cost == b.cost
    c = solve_kz(o, 3, 1, 4.0, PrimitiveBackend(mode="cost_modeled", runtime=LocalRuntime()), seed=5)
    assert np.array_equal(a.centers, c.centers) and c.charges


def test_traces_serialize(rng):
    import json

    o = normalized_instance(rng, 10)
    res = solve_kz(o, 2, 1, 2.0)
    json.dumps(res.rounding.to_dict())
    json.dumps(res.sweep.to_dict())
