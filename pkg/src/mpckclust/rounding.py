"""Rounding a fractional solution of mass k to at most k centers.

1. ``sparsify`` moves every point's unit of demand to a representative so
   that representatives are far apart relative to their cost;
2. ``partial_round`` turns the opening vector into values in {0, 1/2, 1};
3. ``final_round`` keeps all fully open points and, level by level, a ruling
   set of the half-open ones.

Cross-point steps (grouped counts, sums, minima and the sort) go through the
backend's runtime, so the MPC simulator can execute them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostReport, center_cost, estimate_costs
from .errors import ParameterError, PreconditionError
from .fractional import SweepTrace, fractional_kz, sample_k1
from .metric import REL_TOL, DistanceOracle
from .primitives import PrimitiveBackend, ann, range_sum, ruling_set


# -- step 1 --------------------------------------------------------------------------


@dataclass
class SparsifyTrace:
    level: np.ndarray
    L: int
    taus: list
    Q: list
    R: list
    target: np.ndarray

    def to_dict(self) -> dict:
        return {"L": self.L, "taus": self.taus, "level": self.level.tolist(),
                "Q": [q.tolist() for q in self.Q], "R": [r.tolist() for r in self.R],
                "target": self.target.tolist()}


def cost_levels(t: np.ndarray, n: int, gamma: float, z: int) -> np.ndarray:
    """Level 0 for t <= 1/n, else the l >= 1 with (2g)^((l-1)z)/n < t <= (2g)^(lz)/n."""
    base = (2.0 * gamma) ** z
    lev = np.zeros(len(t), dtype=np.int64)
    pos = t > 1.0 / n
    if np.any(pos):
        guess = np.ceil(np.log(n * t[pos]) / np.log(base)).astype(np.int64)
        guess = np.maximum(guess, 1)
        # repair float error at the boundaries so both inequalities hold exactly
        while True:
            up = t[pos] > base ** guess / n
            if not up.any():
                break
            guess[up] += 1
        while True:
            down = (guess > 1) & (t[pos] <= base ** (guess - 1) / n)
            if not down.any():
                break
            guess[down] -= 1
        lev[pos] = guess
    return lev


def sparsify(oracle: DistanceOracle, y, costs: CostReport, gamma: float,
             backend: PrimitiveBackend | None = None) -> tuple[np.ndarray, SparsifyTrace]:
    backend = backend or PrimitiveBackend()
    if costs.estimated_per_point is None or costs.gamma != gamma:
        raise ParameterError("sparsify needs level-set cost estimates computed with the same gamma")
    n, z = oracle.n, costs.z
    level = cost_levels(np.asarray(costs.estimated_per_point), n, gamma, z)
    L = int(level.max())
    taus = [4 * gamma * (2 * gamma) ** ell * n ** (-1.0 / z) for ell in range(L + 1)]
    members = [np.flatnonzero(level == ell) for ell in range(L + 1)]

    Q = []
    with backend.parallel("filter"):
        for ell in range(L + 1):
            lower = (level < ell).astype(float)
            if members[ell].size == 0 or not lower.any():
                Q.append(np.empty(0, dtype=np.int64))
                continue
            b = range_sum(oracle, lower, taus[ell], backend, queries=members[ell])
            Q.append(members[ell][b > 0])
    R = []
    with backend.parallel("ruling"):
        for ell in range(L + 1):
            R.append(ruling_set(oracle, np.setdiff1d(members[ell], Q[ell]), taus[ell], backend))

    target = np.empty(n, dtype=np.int64)
    with backend.parallel("assign"):
        pool = np.empty(0, dtype=np.int64)
        for ell in range(L + 1):
            pool = np.union1d(pool, R[ell])
            if members[ell].size:
                target[members[ell]], _ = ann(oracle, members[ell], pool, backend)
    counts = backend.runtime.group_reduce(target.tolist(), [1] * n, "count")
    w = np.zeros(n, dtype=np.int64)
    for q, c in counts.items():
        w[q] = c
    return w, SparsifyTrace(level, L, taus, Q, R, target)


def separation_slack(oracle: DistanceOracle, w, point_cost, gamma: float, z: int) -> float:
    """min over support pairs of dist(p, q) / (4 gamma max(cost_p, cost_q)^(1/z)); >= 1 is required."""
    S = np.flatnonzero(np.asarray(w) > 0)
    if S.size < 2:
        return np.inf
    D = oracle.submatrix(S, S)
    c = np.asarray(point_cost)[S] ** (1.0 / z)
    need = 4 * gamma * np.maximum(c[:, None], c[None, :])
    np.fill_diagonal(D, np.inf)
    with np.errstate(divide="ignore"):
        ratio = np.where(need > 0, D / need, np.inf)
    return float(ratio.min())


# -- step 2 --------------------------------------------------------------------------


@dataclass
class PartialSolution:
    y_tilde: np.ndarray
    support: np.ndarray
    order: np.ndarray
    hdist: np.ndarray
    y_moved: np.ndarray
    k: int

    @property
    def m(self) -> int:
        return int(self.support.size)

    def to_dict(self) -> dict:
        return {"k": self.k, "support": self.support.tolist(), "order": self.order.tolist(),
                "hdist": self.hdist.tolist(), "y_tilde": self.y_tilde.tolist()}


def partial_round(oracle: DistanceOracle, y, w, k: int, gamma: float, z: int | None = None,
                  backend: PrimitiveBackend | None = None) -> PartialSolution:
    backend = backend or PrimitiveBackend()
    z = oracle.z if z is None else z
    y = np.asarray(y, dtype=float)
    w = np.asarray(w)
    n = oracle.n
    if abs(backend.runtime.fsum(y) - k) > REL_TOL * k:
        raise ParameterError(f"partial rounding needs total mass exactly k={k}")
    S = np.flatnonzero(w > 0)
    if S.size == 0:
        raise ParameterError("weight function has empty support")
    m = S.size

    # stage 1: push the mass of unsupported points to their nearest support point
    outside = np.flatnonzero(w == 0)
    moved = y.copy()
    moved[outside] = 0.0
    if outside.size:
        tgt, _ = ann(oracle, outside, S, backend)
        extra = backend.runtime.group_reduce(tgt.tolist(), y[outside].tolist(), "sum")
        for q, v in extra.items():
            moved[q] = y[q] + v

    # stage 2: half-open everything, fully open the heaviest
    if m >= 2:
        _, hd = ann(oracle, S, S, backend, exclude_self=True)
    else:
        hd = np.zeros(1)
    keys = [(-float(w[p]) * float(h) ** z, int(p)) for p, h in zip(S, hd)]
    order = S[np.asarray(backend.runtime.sort_order(keys), dtype=np.int64)]
    full = max(0, min(2 * k - m, m))
    yt = np.zeros(n)
    yt[S] = 0.5
    yt[order[:full]] = 1.0
    return PartialSolution(yt, S, order, hd, moved, k)


# -- step 3 --------------------------------------------------------------------------


def monotone_ann(oracle: DistanceOracle, H, gamma: float = 1.0,
                 backend: PrimitiveBackend | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Neighbour map on H whose distances do not increase along h.

    Each p looks at its own approximate nearest neighbour and at every q that
    picked p, and keeps the closest (smallest id on ties). Returns
    ``(h, dist)`` aligned with the sorted ids of H.
    """
    backend = backend or PrimitiveBackend()
    H = np.unique(np.asarray(list(H) if not isinstance(H, np.ndarray) else H, dtype=np.int64))
    if H.size < 2:
        raise ParameterError("monotone ANN needs at least two points")
    nn, nd = ann(oracle, H, H, backend, exclude_self=True)
    back = backend.runtime.group_reduce(nn.tolist(), [(float(d), int(q)) for d, q in zip(nd, H)], "min")
    h = nn.copy()
    hd = nd.copy()
    for i, p in enumerate(H):
        cand = back.get(int(p))
        if cand is not None and cand < (float(nd[i]), int(nn[i])):
            hd[i], h[i] = cand
    return h, hd


@dataclass
class FinalRoundTrace:
    F: np.ndarray
    H: np.ndarray
    h: np.ndarray
    level: np.ndarray
    H_prime: dict
    R: dict
    C: np.ndarray

    def to_dict(self) -> dict:
        return {"F": self.F.tolist(), "H": self.H.tolist(), "h": self.h.tolist(),
                "level": self.level.tolist(),
                "H_prime": {int(k): v.tolist() for k, v in self.H_prime.items()},
                "R": {int(k): v.tolist() for k, v in self.R.items()}, "C": self.C.tolist()}


def pair_levels(d: np.ndarray) -> np.ndarray:
    """Smallest l >= 1 with d <= 2^l, i.e. 2^(l-1) < d <= 2^l."""
    lev = np.maximum(np.ceil(np.log2(d)).astype(np.int64), 1)
    lev[d > 2.0 ** lev * (1 + REL_TOL)] += 1
    fix = (lev > 1) & (d <= 2.0 ** (lev - 1) * (1 + REL_TOL))
    lev[fix] -= 1
    return lev


def final_round(oracle: DistanceOracle, w, partial: PartialSolution, gamma: float,
                backend: PrimitiveBackend | None = None) -> tuple[np.ndarray, FinalRoundTrace]:
    backend = backend or PrimitiveBackend()
    yt = partial.y_tilde
    F = np.flatnonzero(yt == 1.0)
    H = np.flatnonzero(yt == 0.5)
    empty = np.empty(0, dtype=np.int64)
    if H.size == 0:
        return F, FinalRoundTrace(F, H, empty, empty, {}, {}, F)
    if H.size == 1:
        raise PreconditionError("exactly one half-open point; partial rounding output is inconsistent")
    h, hd = monotone_ann(oracle, H, gamma, backend)
    if hd.min() < 2 * (1 - REL_TOL):
        raise PreconditionError("final rounding expects a normalized dataset (min distance >= 2)")
    level = pair_levels(hd)
    pos = {int(p): i for i, p in enumerate(H)}
    incoming = backend.runtime.group_reduce(h.tolist(), [1 << int(l) for l in level], "or")
    keep = np.array([level[pos[int(h[i])]] == level[i] or (incoming.get(int(p), 0) >> int(level[i])) & 1
                     for i, p in enumerate(H)], dtype=bool)
    H_prime, R = {}, {}
    with backend.parallel("ruling"):
        for ell in np.unique(level):
            Hp = H[(level == ell) & keep]
            H_prime[int(ell)] = Hp
            R[int(ell)] = ruling_set(oracle, Hp, 2.0 ** (ell + 2), backend)
    parts = [F] + list(R.values())
    C = np.unique(np.concatenate(parts)).astype(np.int64)
    return C, FinalRoundTrace(F, H, h, level, H_prime, R, C)


# -- composition -----------------------------------------------------------------------


@dataclass
class RoundTrace:
    costs: CostReport | None = None
    weights: np.ndarray | None = None
    sparsify: SparsifyTrace | None = None
    partial: PartialSolution | None = None
    final: FinalRoundTrace | None = None

    def to_dict(self) -> dict:
        out = {}
        if self.weights is not None:
            out["weights"] = self.weights.tolist()
        for name in ("sparsify", "partial", "final"):
            part = getattr(self, name)
            if part is not None:
                out[name] = part.to_dict()
        return out


def round_pipeline(oracle: DistanceOracle, y, k: int, gamma: float, z: int | None = None,
                   backend: PrimitiveBackend | None = None) -> tuple[np.ndarray, RoundTrace]:
    backend = backend or PrimitiveBackend()
    z = oracle.z if z is None else z
    n = oracle.n
    if k >= n:
        return np.arange(n), RoundTrace()
    costs = estimate_costs(oracle, y, gamma, z, backend)
    w, sp = sparsify(oracle, y, costs, gamma, backend)
    partial = partial_round(oracle, y, w, k, gamma, z, backend)
    C, fin = final_round(oracle, w, partial, gamma, backend)
    return C, RoundTrace(costs, w, sp, partial, fin)


@dataclass
class SolveResult:
    centers: np.ndarray
    cost: float
    k: int
    z: int
    gamma: float
    y: np.ndarray | None = field(default=None, repr=False)
    sweep: SweepTrace | None = None
    rounding: RoundTrace | None = None
    charges: list = field(default_factory=list)


def solve_kz(oracle: DistanceOracle, k: int, z: int, gamma: float,
             backend: PrimitiveBackend | None = None, seed: int = 0) -> SolveResult:
    """Fractional sweep followed by the three rounding steps (k = 1: best sampled center)."""
    backend = backend or PrimitiveBackend()
    n = oracle.n
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    if k == 1:
        y, cost = sample_k1(oracle, z, seed=seed, backend=backend)
        C = np.flatnonzero(y)
        return SolveResult(C, cost, k, z, float(gamma), y, charges=list(backend.runtime.charges))
    y, sweep = fractional_kz(oracle, k, z, gamma, backend)
    C, rt = round_pipeline(oracle, y, k, gamma, z, backend)
    return SolveResult(C, center_cost(oracle, C, z), k, z, float(gamma), y, sweep, rt,
                       list(backend.runtime.charges))
