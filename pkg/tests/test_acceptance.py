"""The eleven acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line (collected again in the
terminal summary) before asserting. Ratio-style criteria compare against
``fixtures/baselines.json``; regenerate it with ``fixtures/regenerate.py``
only when a change is meant to move those numbers.
"""

import math
import time

import numpy as np
import pytest

import fixture_cases as fc
from conftest import VERDICTS
from mpckclust import MpcConfig, distributed_solve_kz, solve_kz
from mpckclust.oracles import lp_opt_fractional_fl
from mpckclust.verify import (counterexample, cost_estimation_suite, final_round_suite, lemma_suite,
                              normalized_instance, rounding_suite, sandwich_suite, sweep_suite)

PIN_TOL = 1e-9


@pytest.fixture(scope="module")
def baselines():
    return fc.load_baselines()


def verdict(number: int, ok: bool, detail: str):
    text = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    print(text)
    VERDICTS.append(text)
    assert ok, text


def not_above(value: float, pinned: float) -> bool:
    return value <= pinned * (1 + PIN_TOL) + 1e-12


def test_criterion_01_exact_lemmas():
    t0 = time.perf_counter()
    rep = lemma_suite(count=200, seed=0)
    took = time.perf_counter() - t0
    checked = sum(e.checked for e in rep.entries.values())
    verdict(1, rep.passed and took < 60,
            f"radius inequalities on 200 instances, {checked} checks, failures={rep.failures()}, {took:.1f}s")


def test_criterion_02_sandwich():
    rep = sandwich_suite(count=100, seed=0)
    worst = min(e.worst_slack for e in rep.entries.values())
    verdict(2, rep.passed, f"robust radii sandwich, gamma in {{1,2,4}}, 100 instances, "
                           f"failures={rep.failures()}, worst slack {worst:.3g}")


def test_criterion_03_lmp(baselines):
    rep, ratios = fc.lmp_ratios()
    pinned = baselines["lmp_ratios"]
    finite = all(math.isfinite(v) for v in ratios.values())
    same_keys = set(ratios) == set(pinned)
    regress = [k for k, v in ratios.items() if k in pinned and not not_above(v, pinned[k])]
    ok = rep.passed and finite and same_keys and not regress
    verdict(3, ok, f"lam*|y| <= OPT_fl on {rep.entries['lmp_gap_nonnegative'].checked} solutions, "
                   f"{len(ratios)} ratios finite={finite}, max {max(ratios.values()):.3g}, "
                   f"regressions={len(regress)}, fixture set unchanged={same_keys}")


def test_criterion_04_counterexample():
    results = [counterexample(n) for n in (20, 50, 200)]
    ok = all(abs(c["r_p"] - 5 / 8) <= 1e-12 and abs(c["x_pq"] - 3 / 8) <= 1e-12 and c["violates"]
             for c in results)
    last = results[-1]
    verdict(4, ok, f"z=2 instance, n in {{20,50,200}}: r_p={last['r_p']!r}, x_pq={last['x_pq']!r}, "
                   f"y_q={last['y_q']:.4g} < x_pq")


def test_criterion_05_sweep():
    rep = sweep_suite(count=100, seed=0, lp_n_max=0)
    rng = np.random.default_rng(5)
    worst_b1 = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        z = int(rng.integers(1, 3))
        oracle = normalized_instance(rng, n)
        worst_b1 = max(worst_b1, abs(lp_opt_fractional_fl(oracle, 1.0, z).value - n) / n)
    ok = rep.passed and worst_b1 <= 1e-7
    verdict(5, ok, f"100 sweeps: mass=k, |y^L|<=2, blend feasible, failures={rep.failures()}; "
                   f"OPT_fl(1)=n on 100 LPs, worst rel err {worst_b1:.2g}")


def test_criterion_06_cost_estimation():
    rep = cost_estimation_suite(count=100, seed=0)
    checked = sum(e.checked for e in rep.entries.values())
    verdict(6, rep.passed, f"cost <= t~ <= gamma^(2z) cost, gamma in {{2,4,8}}, 100 instances, "
                           f"{checked} checks, failures={rep.failures()}")


def test_criterion_07_value(baselines):
    cases = fc.value_cases()
    pinned = {c["hash"]: c for c in baselines["value"]["cases"]}
    lower = all(c["opt"] <= c["eta"] * (1 + PIN_TOL) for c in cases)
    ratios = [c["ratio"] for c in cases if c["ratio"] is not None]
    regress = [c["hash"] for c in cases
               if c["ratio"] is not None and not not_above(c["ratio"], pinned[c["hash"]]["ratio"])]
    missing = [c["hash"] for c in cases if c["hash"] not in pinned]
    ok = lower and not regress and not missing and not_above(max(ratios), baselines["value"]["max_ratio"])
    verdict(7, ok, f"OPT <= eta on {len(cases)} fixtures={lower}, eta/OPT max {max(ratios):.3g} "
                   f"(pinned {baselines['value']['max_ratio']:.3g}), regressions={len(regress) + len(missing)}")


def test_criterion_08_rounding():
    rep = rounding_suite(count=200, seed=0)
    rep.merge(final_round_suite(count=200, seed=0))
    names = sorted(rep.entries)
    verdict(8, rep.passed, f"200 pipelines + 200 final-step inputs, n <= 20: {len(names)} contracts, "
                           f"failures={rep.failures()}")


def test_criterion_09_end_to_end(baselines):
    cases = fc.e2e_cases()
    pinned = {c["hash"]: c for c in baselines["e2e"]["cases"]}
    ratios = [c["ratio"] for c in cases if c["ratio"] is not None]
    finite = all(math.isfinite(r) for r in ratios)
    regress = [c["hash"] for c in cases
               if c["ratio"] is not None and not not_above(c["ratio"], pinned[c["hash"]]["ratio"])]
    sizes = all(len(c["centers"]) <= c["k"] for c in cases)
    ok = finite and sizes and not regress and len(cases) == len(pinned)
    verdict(9, ok, f"cost/OPT on {len(cases)} fixtures (gamma=8): finite={finite}, "
                   f"median {np.median(ratios):.3g}, max {max(ratios):.4g}, regressions={len(regress)}")


def test_criterion_10_simulator(baselines):
    mismatched = []
    for oracle, k, z, gamma, s, seed in fc.mpc_fixtures():
        off = solve_kz(oracle, k, z, gamma, seed=seed)
        C, stats, res = distributed_solve_kz(oracle, k, z, gamma, MpcConfig.auto(s, oracle.n, seed), seed=seed)
        same = (np.array_equal(off.centers, C) and off.cost == res.cost
                and np.array_equal(off.y, res.y) and stats.peak_local <= s)
        if not same:
            mismatched.append(seed)
    c = baselines["mpc"]["c"]
    grid = fc.mpc_grid()
    bounded = all(r["rounds"] <= c * r["log_s_n"] and r["peak_local"] <= r["s"] for r in grid)
    by_ns = {(r["n"], r["s"]): r["rounds"] for r in grid}
    squared = [(n, s) for (n, s) in by_ns if (n, s * s) in by_ns]
    monotone = all(by_ns[(n, s * s)] <= by_ns[(n, s)] for n, s in squared)
    ok = not mismatched and bounded and monotone and bool(squared)
    verdict(10, ok, f"{fc.MPC_FIXTURES} fixtures bit-identical (mismatches={mismatched}); "
                    f"rounds <= {c:g} * ceil(log_s n) on {len(grid)} grid points={bounded}; "
                    f"squaring s never adds rounds={monotone}")


def test_criterion_11_preprocessing(baselines):
    pre = fc.preprocess_cases()
    pinned_exp = baselines["preprocess"]["max_exponent"]
    p1 = all(c["after"] <= c["bound"] and c["after"] <= c["n"] ** pinned_exp * (1 + PIN_TOL) for c in pre)
    pull = fc.pullback_cases()
    factor = max(c["ratio"] for c in pull)
    p2 = not_above(factor, baselines["pullback"]["max_ratio"])
    verdict(11, p1 and p2, f"aspect after <= poly(n) bound and <= n^{pinned_exp:.3g} on {len(pre)} fixtures={p1} "
                           f"(largest input aspect {max(c['before'] for c in pre):.3g}); "
                           f"pullback factor {factor:.4g} <= pinned={p2}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
