"""Seeded property batteries.

Each suite draws its own instances from a seed and returns a
:class:`PropertyReport`; exact properties fail the report, ratio-style
quantities are returned alongside for regression pinning. The CLI ``verify``
command and the acceptance tests run the same code.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from .costs import estimate_costs, optimal_assignment, point_costs
from .errors import DegenerateDatasetError
from .facility import (DerivedConstants, RadiusProfile, SolverParams, infeasible_assignment,
                       mp_beta, mp_level_variant, radii_for_scale)
from .fractional import fractional_kz
from .lemmas import PropertyReport, check_structural_properties, dual_vector, dual_violation
from .metric import REL_TOL, Dataset, EuclideanOracle, distort, normalize_dataset
from .primitives import PrimitiveBackend, ann, check_ruling_set
from .rounding import PartialSolution, final_round, partial_round, separation_slack, sparsify

TOL = 1e-9


def instance_hash(points) -> str:
    pts = np.ascontiguousarray(np.asarray(points, dtype="<f8"))
    h = hashlib.sha256(str(pts.shape).encode())
    h.update(pts.tobytes())
    return h.hexdigest()[:16]


def random_points(rng: np.random.Generator, n: int, d: int = 2) -> np.ndarray:
    """Clustered points at a random scale; a mixture keeps ratios interesting."""
    centers = rng.uniform(0, 100, size=(max(1, n // 3), d))
    pts = centers[rng.integers(0, len(centers), size=n)] + rng.normal(0, rng.uniform(0.5, 10), size=(n, d))
    return pts * 10 ** rng.uniform(-2, 2)


def normalized_instance(rng: np.random.Generator, n: int, d: int = 2) -> EuclideanOracle:
    while True:
        try:
            P, _, _ = normalize_dataset(Dataset(random_points(rng, n, d)))
            return EuclideanOracle(P)
        except DegenerateDatasetError:
            continue


# -- facility location -----------------------------------------------------------------


def lemma_suite(count: int = 200, seed: int = 0, betas=None) -> PropertyReport:
    """Radius inequalities on random instances, n in [2, 15], z in {1, 2, 3}."""
    rng = np.random.default_rng(seed)
    rep = PropertyReport()
    for _ in range(count):
        n = int(rng.integers(2, 16))
        z = int(rng.integers(1, 4))
        oracle = EuclideanOracle(Dataset(random_points(rng, n, int(rng.integers(1, 4)))))
        lam = float(2.0 ** rng.uniform(-3, 8))
        scales = betas or (1 / 16, 1 / 8, DerivedConstants(z).beta_star)
        rep.merge(check_structural_properties(oracle, lam, z, scales))
    return rep


def sandwich_suite(count: int = 100, seed: int = 0, gammas=(1.0, 2.0, 4.0)) -> PropertyReport:
    """r at beta_robust <= robust radii <= r at beta* entrywise.

    Two renditions: MP at beta_robust on an oracle distorted within
    [1, gamma^2] (every gamma), and the level-set solver whose balls come from
    an oracle distorted within [1, gamma] (gamma > 1), which is exactly the
    freedom the level sets are allowed.
    """
    rng = np.random.default_rng(seed)
    rep = PropertyReport()
    for i in range(count):
        n = int(rng.integers(2, 16))
        z = int(rng.integers(1, 4))
        gamma = float(gammas[i % len(gammas)])
        base = normalized_instance(rng, n)
        lam = float(2.0 ** rng.uniform(0, 8))
        params = SolverParams.robust(z, lam, gamma)
        lo = radii_for_scale(base, lam, z, params.beta)
        hi = radii_for_scale(base, lam, z, DerivedConstants(z).beta_star)
        log_uniform = bool(rng.integers(0, 2))
        r = radii_for_scale(distort(base, gamma, seed + i, log_uniform), lam, z, params.beta)
        e = rep.entry("sandwich_distorted")
        e.update(lo, r)
        e.update(r, hi)
        if gamma > 1:
            y, _ = mp_level_variant(distort(base, math.sqrt(gamma), seed + i, log_uniform), params)
            e = rep.entry("sandwich_level_sets")
            e.update(lo, y * lam)
            e.update(y * lam, hi)
    return rep


def counterexample(n: int = 20) -> dict:
    """z = 2, points 0, 1/2 and n copies at sqrt(5/8), lam = beta = 1."""
    pts = np.array([0.0, 0.5] + [math.sqrt(5 / 8)] * n)
    oracle = EuclideanOracle(Dataset(pts))
    radii = radii_for_scale(oracle, 1.0, 2, 1.0)
    prof = RadiusProfile(1.0, 1.0, 2, radii)
    x = infeasible_assignment(prof, oracle).to_dense()
    return {"n": n, "r_p": float(radii[0]), "x_pq": float(x[0, 1]), "y_q": float(prof.y[1]),
            "violates": bool(x[0, 1] > prof.y[1])}


def counterexample_report(n: int = 20) -> PropertyReport:
    rep = PropertyReport()
    c = counterexample(n)
    rep.entry("counterexample_r_p").update(abs(c["r_p"] - 5 / 8), 0.0, scale=1.0)
    rep.entry("counterexample_x_pq").update(abs(c["x_pq"] - 3 / 8), 0.0, scale=1.0)
    rep.entry("counterexample_violation").update(c["y_q"], c["x_pq"], scale=1.0)
    return rep


def lmp_suite(count: int = 40, seed: int = 0, n_max: int = 10, gammas=(1.0, 2.0, 4.0)):
    """lam * |y~| <= OPT_fl and weak duality, plus per-fixture LMP ratios.

    Returns (report, ratios) with ratios keyed by "<hash>:<variant>:<z>:<lam>".
    Fixtures whose gap is below 1e-6 * OPT_fl are skipped from the ratios.
    """
    from .oracles import lp_opt_fractional_fl

    rng = np.random.default_rng(seed)
    rep = PropertyReport()
    ratios: dict = {}
    for i in range(count):
        n = int(rng.integers(2, n_max + 1))
        z = int(rng.integers(1, 3))
        base = normalized_instance(rng, n)
        lam = float(2.0 ** rng.integers(1, 3 * z + 4))
        opt = lp_opt_fractional_fl(base, lam, z).value
        gamma = float(gammas[i % len(gammas)])
        variants = {"mp": mp_beta(base, SolverParams.star(z, lam))}
        params = SolverParams.robust(z, lam, gamma)
        if gamma > 1:
            variants["level"] = mp_level_variant(distort(base, math.sqrt(gamma), seed + i), params)[0]
        else:
            variants["level"] = mp_beta(base, params)
        for name, y in variants.items():
            opened = lam * math.fsum(y)
            rep.entry("lmp_gap_nonnegative").update(opened, opt)
            gap = opt - opened
            cost = math.fsum(point_costs(base, y, z)) if y.sum() >= 1 - REL_TOL else math.inf
            if gap > 1e-6 * opt:
                key = f"{instance_hash(base.dataset.points)}:{name}:{z}:{lam:g}:{gamma:g}"
                ratios[key] = cost / gap
                rep.entry("lmp_ratio_finite").update(0.0 if math.isfinite(cost / gap) else 1.0, 0.0, scale=1.0)
        beta = DerivedConstants(z).beta_star
        v = dual_vector(base, lam, z, beta)
        rep.entry("dual_feasible").update(dual_violation(base, v, lam, z), 0.0, scale=lam)
        rep.entry("weak_duality").update(math.fsum(v), opt)
    return rep, ratios


# -- fractional clustering -----------------------------------------------------------


def sweep_suite(count: int = 100, seed: int = 0, n_max: int = 15, lp_n_max: int = 8) -> PropertyReport:
    from .oracles import lp_opt_fractional_fl

    rng = np.random.default_rng(seed)
    rep = PropertyReport()
    for _ in range(count):
        n = int(rng.integers(2, n_max + 1))
        z = int(rng.integers(1, 3))
        k = int(rng.integers(2, n + 1))
        gamma = float(rng.choice([2.0, 4.0, 8.0]))
        oracle = normalized_instance(rng, n)
        y, tr = fractional_kz(oracle, k, z, gamma)
        rep.entry("sweep_mass_equals_k").update(abs(math.fsum(y) - k), 0.0, scale=1.0)
        rep.entry("sweep_final_mass_le_2").update(tr.masses[-1], 2.0)
        rep.entry("sweep_initial_mass_n").update(abs(tr.masses[0] - n), 0.0, scale=n)
        x = optimal_assignment(oracle, tr.y_prev, z).blend(optimal_assignment(oracle, tr.y_next, z), tr.alpha)
        c1, c2 = x.violations(y)
        rep.entry("blend_cover").update(c1, 0.0, scale=1.0)
        rep.entry("blend_capacity").update(c2, 0.0, scale=1.0)
        if n <= lp_n_max:
            opt = lp_opt_fractional_fl(oracle, 1.0, z).value
            rep.entry("fl_opt_at_unit_cost").update(abs(opt - n), 1e-7 * n, scale=n)
    return rep


def cost_estimation_suite(count: int = 100, seed: int = 0, gammas=(2.0, 4.0, 8.0), n_max: int = 20):
    """cost(p, y) <= t~_p <= gamma^(2z) cost(p, y) for every point."""
    rng = np.random.default_rng(seed)
    rep = PropertyReport()
    for i in range(count):
        n = int(rng.integers(2, n_max + 1))
        z = int(rng.integers(1, 3))
        gamma = float(gammas[i % len(gammas)])
        oracle = normalized_instance(rng, n)
        if i % 2 and n >= 2:
            y, _ = fractional_kz(oracle, int(rng.integers(2, n + 1)), z, gamma)
        else:
            y = rng.random(n)
            y *= rng.uniform(1, n) / y.sum()
        r = estimate_costs(oracle, y, gamma, z, with_exact=True)
        est, exact = r.estimated_per_point, r.per_point
        scale = np.maximum(exact, 1.0) * gamma ** (2 * z)
        rep.entry("estimate_lower").update(exact, est, scale=scale)
        rep.entry("estimate_upper").update(est, gamma ** (2 * z) * exact, scale=scale)
    return rep


# -- rounding ----------------------------------------------------------------------------


def check_pipeline(oracle, y, k: int, z: int, gamma: float, rep: PropertyReport,
                   backend: PrimitiveBackend | None = None):
    """Run the three rounding steps and record every exact contract."""
    backend = backend or PrimitiveBackend()
    n = oracle.n
    costs = estimate_costs(oracle, y, gamma, z, backend, with_exact=True)
    w, sp = sparsify(oracle, y, costs, gamma, backend)
    rep.entry("weights_sum_n").update(abs(int(w.sum()) - n), 0.0, scale=1.0)
    rep.entry("support_separation").update(1.0, separation_slack(oracle, w, costs.per_point, gamma, z), scale=1.0)
    for ell in range(sp.L + 1):
        members = np.flatnonzero(sp.level == ell)
        cand = np.setdiff1d(members, sp.Q[ell])
        ok, _ = check_ruling_set(oracle, cand, sp.R[ell], sp.taus[ell], backend.alpha_r)
        rep.entry("ruling_set_sparsify").update(0.0 if ok else 1.0, 0.0, scale=1.0)

    part = partial_round(oracle, y, w, k, gamma, z, backend)
    yt = part.y_tilde
    rep.entry("partial_mass_le_k").update(yt.sum(), k, scale=1.0)
    sup = w > 0
    ok = np.all((yt == 0) == ~sup) and np.all(np.isin(yt[sup], (0.5, 1.0)))
    rep.entry("partial_support_values").update(0.0 if ok else 1.0, 0.0, scale=1.0)
    rep.entry("moved_mass_half").update(0.5, part.y_moved[part.support], scale=1.0)
    if part.m >= 2:
        _, nd = ann(oracle, part.support, part.support, PrimitiveBackend(), exclude_self=True)
        e = rep.entry("hdist_band")
        e.update(nd, part.hdist)
        e.update(part.hdist, gamma * nd)

    C, fin = final_round(oracle, w, part, gamma, backend)
    record_final(oracle, fin, gamma, backend.alpha_r, rep)
    rep.entry("size_bound").update(C.size, k, scale=1.0)
    return C


def record_final(oracle, fin, gamma: float, alpha_r: float, rep: PropertyReport):
    """Monotone-ANN bullets, level bands and ruling-set checks of the last step."""
    H = fin.H
    if H.size >= 2:
        D = oracle.submatrix(H, H)
        np.fill_diagonal(D, np.inf)
        pos = {int(p): i for i, p in enumerate(H)}
        hi = np.array([pos[int(q)] for q in fin.h])
        hd = D[np.arange(H.size), hi]
        e = rep.entry("monotone_ann")
        e.update(0.0 if np.all(fin.h != H) else 1.0, 0.0, scale=1.0)
        e.update(hd, gamma * D.min(axis=1))
        e.update(hd[hi], hd)
        e = rep.entry("final_levels")
        e.update(2.0 ** (fin.level - 1), hd)
        e.update(hd, 2.0 ** fin.level)
        for ell, Hp in fin.H_prime.items():
            ok, _ = check_ruling_set(oracle, Hp, fin.R[ell], 2.0 ** (ell + 2), alpha_r)
            rep.entry("ruling_set_final").update(0.0 if ok else 1.0, 0.0, scale=1.0)


def rounding_suite(count: int = 200, seed: int = 0, n_max: int = 20, gammas=(2.0, 4.0, 8.0)) -> PropertyReport:
    rng = np.random.default_rng(seed)
    rep = PropertyReport()
    for i in range(count):
        n = int(rng.integers(3, n_max + 1))
        z = int(rng.integers(1, 3))
        k = int(rng.integers(2, n))
        gamma = float(gammas[i % len(gammas)])
        oracle = normalized_instance(rng, n)
        y, _ = fractional_kz(oracle, k, z, gamma)
        check_pipeline(oracle, y, k, z, gamma, rep)
    return rep


def final_round_suite(count: int = 200, seed: int = 0, n_max: int = 20, gammas=(2.0, 4.0, 8.0)) -> PropertyReport:
    """Last step on synthetic {0, 1/2, 1} inputs shaped like partial rounding output.

    Realistic pipelines at n <= 20 almost never leave half-open points (the
    separation filter keeps at most k support points), so this suite feeds the
    last step directly: |F| = 2k - m fully open and |H| = 2(m - k) half open.
    """
    rng = np.random.default_rng(seed)
    rep = PropertyReport()
    for i in range(count):
        n = int(rng.integers(2, n_max + 1))
        gamma = float(gammas[i % len(gammas)])
        oracle = normalized_instance(rng, n)
        h = 2 * int(rng.integers(1, n // 2 + 1))
        f = int(rng.integers(0, n - h + 1))
        ids = rng.permutation(n)
        F, H = np.sort(ids[:f]), np.sort(ids[f:f + h])
        k = f + h // 2
        yt = np.zeros(n)
        yt[F], yt[H] = 1.0, 0.5
        sup = np.sort(np.concatenate([F, H]))
        part = PartialSolution(yt, sup, sup, np.zeros(sup.size), yt.copy(), k)
        C, fin = final_round(oracle, (yt > 0).astype(int), part, gamma)
        record_final(oracle, fin, gamma, 1.0, rep)
        rep.entry("size_bound").update(C.size, k, scale=1.0)
        rep.entry("keeps_fully_open").update(0.0 if np.all(np.isin(F, C)) else 1.0, 0.0, scale=1.0)
    return rep


SUITES = {
    "lemmas": lambda count, seed: lemma_suite(count, seed),
    "sandwich": lambda count, seed: sandwich_suite(count, seed),
    "counterexample": lambda count, seed: counterexample_report(),
    "lmp": lambda count, seed: lmp_suite(max(1, count // 2), seed)[0],
    "sweep": lambda count, seed: sweep_suite(count, seed),
    "cost_estimation": lambda count, seed: cost_estimation_suite(count, seed),
    "rounding": lambda count, seed: rounding_suite(count, seed),
    "final_round": lambda count, seed: final_round_suite(count, seed),
}


def run_battery(count: int = 20, seed: int = 0, suites=None) -> PropertyReport:
    rep = PropertyReport()
    for name in suites or SUITES:
        rep.merge(SUITES[name](count, seed))
    return rep
