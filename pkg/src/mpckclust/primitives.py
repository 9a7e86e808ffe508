"""Metric ruling sets, range sums and approximate nearest neighbours.

Each primitive has an exact offline implementation. A ``cost_modeled``
backend runs the same computation but charges rounds and memory to the
backend's runtime, and can optionally inject the slack the approximate
versions are allowed (coarser ruling sets, upper range sums, farther
neighbours) to exercise the robustness of callers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ParameterError
from .metric import REL_TOL, DistanceOracle
from .runtime import CostModel, LocalRuntime

MODES = ("exact", "cost_modeled")


@dataclass
class PrimitiveBackend:
    mode: str = "exact"
    alpha_r: float = 1.0
    gamma: float = 1.0
    ann_slack: bool = False
    range_slack: bool = False
    cost_model: CostModel = field(default_factory=CostModel)
    runtime: Any = field(default_factory=LocalRuntime)
    verify: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"backend mode must be one of {MODES}, got {self.mode!r}")
        if self.alpha_r < 1 or self.gamma < 1:
            raise ParameterError("alpha_r and gamma must be >= 1")
        if self.mode == "exact" and (self.alpha_r != 1 or self.gamma != 1 or self.ann_slack or self.range_slack):
            raise ParameterError("exact backend has alpha_r = gamma = 1 and no slack")

    @property
    def charging(self) -> bool:
        return self.mode == "cost_modeled"

    def charge(self, primitive: str, n: int, invocations: int = 1):
        if self.charging:
            self.runtime.charge(primitive, n, self.cost_model, invocations)

    def parallel(self, label: str = "batch"):
        return self.runtime.parallel(label)

    def fresh(self) -> "PrimitiveBackend":
        """Same settings, new offline runtime (empty charge log)."""
        return PrimitiveBackend(self.mode, self.alpha_r, self.gamma, self.ann_slack,
                                self.range_slack, self.cost_model, LocalRuntime(), self.verify)


def _ids(Q) -> np.ndarray:
    return np.unique(np.asarray(list(Q) if not isinstance(Q, np.ndarray) else Q, dtype=np.int64))


def ruling_set(oracle: DistanceOracle, Q, tau: float, backend: PrimitiveBackend | None = None) -> np.ndarray:
    """Greedy ruling set of ``Q`` scanning ids in ascending order.

    Points of the result are pairwise at least ``tau`` apart and every member
    of ``Q`` lies within ``alpha_r * tau`` of it. With slack the scan uses
    separation ``alpha_r * tau``, which still satisfies both bounds.
    """
    backend = backend or PrimitiveBackend()
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    Q = _ids(Q)
    backend.charge("ruling_set", oracle.n)
    if Q.size == 0:
        return Q
    sep = tau * (backend.alpha_r if backend.mode == "cost_modeled" else 1.0)
    thresh = sep * (1 - REL_TOL)
    gap = np.full(Q.size, np.inf)
    chosen = []
    for i in range(Q.size):
        if gap[i] >= thresh:
            chosen.append(Q[i])
            np.minimum(gap, oracle.submatrix([Q[i]], Q)[0], out=gap)
    R = np.array(chosen, dtype=np.int64)
    if backend.verify:
        ok, detail = check_ruling_set(oracle, Q, R, tau, backend.alpha_r)
        if not ok:
            raise AssertionError(f"ruling set violates its definition: {detail}")
    return R


def check_ruling_set(oracle: DistanceOracle, Q, R, tau: float, alpha_r: float = 1.0) -> tuple[bool, dict]:
    """Verify separation >= tau on R and coverage <= alpha_r * tau of Q."""
    Q, R = _ids(Q), _ids(R)
    if Q.size == 0:
        return R.size == 0, {"min_sep": np.inf, "max_cover": 0.0}
    if R.size == 0 or not np.all(np.isin(R, Q)):
        return False, {"min_sep": np.nan, "max_cover": np.inf}
    DR = oracle.submatrix(R, R)
    np.fill_diagonal(DR, np.inf)
    min_sep = float(DR.min()) if R.size > 1 else np.inf
    max_cover = float(oracle.submatrix(R, Q).min(axis=0).max())
    ok = min_sep >= tau * (1 - REL_TOL) and max_cover <= alpha_r * tau * (1 + REL_TOL)
    return ok, {"min_sep": min_sep, "max_cover": max_cover, "tau": tau}


def range_sums(oracle: DistanceOracle, values, taus, backend: PrimitiveBackend | None = None,
               queries=None) -> np.ndarray:
    """``out[i, j] = sum of values[q] over q with dist(queries[i], q) <= taus[j]``.

    With range slack the upper end of the allowed band (radius ``gamma * tau``)
    is returned instead.
    """
    backend = backend or PrimitiveBackend()
    values = np.asarray(values, dtype=float)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if np.any(taus <= 0):
        raise ParameterError("range radii must be positive")
    if backend.mode == "cost_modeled" and backend.range_slack:
        taus = taus * backend.gamma
    with backend.parallel("range_sum"):
        backend.charge("range_sum", oracle.n, invocations=len(taus))
    rows = np.arange(oracle.n) if queries is None else np.asarray(queries, dtype=np.int64)
    out = np.empty((len(rows), len(taus)))
    pos = 0
    for idx, block in oracle.blocks(rows):
        for j, t in enumerate(taus):
            out[pos:pos + len(idx), j] = (block <= t * (1 + REL_TOL)) @ values
        pos += len(idx)
    return out


def range_sum(oracle: DistanceOracle, values, tau: float, backend: PrimitiveBackend | None = None,
              queries=None) -> np.ndarray:
    return range_sums(oracle, values, [tau], backend, queries)[:, 0]


def ann(oracle: DistanceOracle, queries, targets, backend: PrimitiveBackend | None = None,
        exclude_self: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Nearest target for every query point; returns ``(target_ids, distances)``.

    Ties go to the smallest id. ``exclude_self`` makes each query ignore itself
    as a target. With ANN slack the farthest target within ``gamma`` times the
    true nearest distance is returned (again smallest id on ties), which is a
    deterministic, admissible choice.
    """
    backend = backend or PrimitiveBackend()
    queries = np.asarray(queries, dtype=np.int64)
    targets = _ids(targets)
    if targets.size == 0:
        raise ParameterError("ANN target set is empty")
    backend.charge("ann", oracle.n)
    slack = backend.mode == "cost_modeled" and backend.ann_slack
    out = np.empty(queries.size, dtype=np.int64)
    dist = np.empty(queries.size)
    pos = 0
    for idx, block in oracle.blocks(queries):
        D = block[:, targets].copy()
        if exclude_self:
            hit = targets[None, :] == idx[:, None]
            D[hit] = np.inf
        best = D.min(axis=1)
        if np.any(~np.isfinite(best)):
            raise ParameterError("ANN target set is empty after excluding the query point")
        if slack:
            ok = D <= backend.gamma * best[:, None]
            cand = np.where(ok, D, -np.inf)
            j = cand.argmax(axis=1)
        else:
            j = D.argmin(axis=1)
        out[pos:pos + len(idx)] = targets[j]
        dist[pos:pos + len(idx)] = D[np.arange(len(idx)), j]
        pos += len(idx)
    return out, dist
