"""Fractional solutions, assignments and their costs.

For a fixed opening vector ``y`` the assignment LP separates per point: each
point buys one unit of mass from the cheapest open locations first. The
level-set estimator (``estimate_costs``) approximates the same per-point cost
from range sums only, which is what a distributed implementation can afford.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, ParameterError, PreconditionError
from .levels import level_depth, level_sums
from .metric import REL_TOL, DistanceOracle, is_normalized
from .primitives import PrimitiveBackend


def check_mass(y, at_least: float = 1.0) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise ParameterError("opening vector must be finite and nonnegative")
    if y.sum() < at_least * (1 - REL_TOL):
        raise InfeasibleError(f"total opening mass {y.sum():.6g} is below {at_least}")
    return y


@dataclass
class Assignment:
    """Sparse nonnegative assignment in coordinate form: ``x[p[i], q[i]] = x[i]``."""

    n: int
    p: np.ndarray
    q: np.ndarray
    x: np.ndarray

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.p, weights=self.x, minlength=self.n)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (self.p, self.q), self.x)
        return out

    def sigma(self, oracle: DistanceOracle, z: int) -> float:
        """Assignment cost: sum of x[p, q] * dist^z(p, q)."""
        return math.fsum(self.x * pair_dists(oracle, self.p, self.q) ** z)

    def violations(self, y) -> tuple[float, float]:
        """Largest shortfall of row sums below 1 and largest excess of x over y."""
        y = np.asarray(y, dtype=float)
        c1 = float(np.max(1 - self.row_sums(), initial=-np.inf))
        dense = self.to_dense()
        c2 = float(np.max(dense - y[None, :]))
        return c1, c2

    def is_feasible(self, y, tol: float = 1e-9) -> bool:
        c1, c2 = self.violations(y)
        return c1 <= tol and c2 <= tol

    def blend(self, other: "Assignment", alpha: float) -> "Assignment":
        """alpha * self + (1 - alpha) * other."""
        dense = alpha * self.to_dense() + (1 - alpha) * other.to_dense()
        return Assignment.from_dense(dense)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "Assignment":
        p, q = np.nonzero(dense)
        return cls(dense.shape[0], p, q, dense[p, q])


def pair_dists(oracle: DistanceOracle, p, q) -> np.ndarray:
    p = np.asarray(p, dtype=np.int64)
    q = np.asarray(q, dtype=np.int64)
    out = np.empty(p.size)
    rows, inv = np.unique(p, return_inverse=True)
    for idx, block in oracle.blocks(rows):
        lo = np.searchsorted(rows, idx[0])
        sel = (inv >= lo) & (inv < lo + len(idx))
        out[sel] = block[inv[sel] - lo, q[sel]]
    return out


def optimal_assignment(oracle: DistanceOracle, y, z: int) -> Assignment:
    """Per point, fill one unit of mass over targets sorted by (dist^z, id)."""
    y = check_mass(y)
    support = np.flatnonzero(y > 0)
    ys = y[support]
    ps, qs, xs = [], [], []
    for idx, block in oracle.blocks():
        Dz = block[:, support] ** z
        order = np.argsort(Dz, axis=1, kind="stable")
        yo = ys[order]
        before = np.cumsum(yo, axis=1) - yo
        take = np.minimum(yo, np.maximum(1.0 - before, 0.0))
        r, c = np.nonzero(take)
        ps.append(idx[r])
        qs.append(support[order[r, c]])
        xs.append(take[r, c])
    return Assignment(oracle.n, np.concatenate(ps), np.concatenate(qs), np.concatenate(xs))


@dataclass
class CostReport:
    total: float | None
    per_point: np.ndarray | None
    estimated_per_point: np.ndarray | None = None
    estimated_total: float | None = None
    gamma: float | None = None
    z: int = 1

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else [float(v) for v in a]
        return {"total": self.total, "per_point": arr(self.per_point),
                "estimated_total": self.estimated_total,
                "estimated_per_point": arr(self.estimated_per_point),
                "gamma": self.gamma, "z": self.z}

    @classmethod
    def from_dict(cls, d: dict) -> "CostReport":
        def arr(a):
            return None if a is None else np.asarray(a, dtype=float)
        return cls(d["total"], arr(d["per_point"]), arr(d.get("estimated_per_point")),
                   d.get("estimated_total"), d.get("gamma"), d.get("z", 1))


def point_costs(oracle: DistanceOracle, y, z: int) -> np.ndarray:
    x = optimal_assignment(oracle, y, z)
    contrib = x.x * pair_dists(oracle, x.p, x.q) ** z
    return np.bincount(x.p, weights=contrib, minlength=oracle.n)


def clustering_cost(oracle: DistanceOracle, y, z: int) -> CostReport:
    per = point_costs(oracle, y, z)
    return CostReport(math.fsum(per), per, z=z)


def point_cost(oracle: DistanceOracle, p: int, y, z: int) -> float:
    y = check_mass(y)
    d = oracle.rows([p])[0] ** z
    order = np.lexsort((np.arange(oracle.n), d))
    remaining, total = 1.0, 0.0
    for q in order:
        if remaining <= 0:
            break
        take = min(remaining, y[q])
        total += take * d[q]
        remaining -= take
    return total


def center_cost(oracle: DistanceOracle, centers, z: int) -> float:
    """Integral cost: sum over points of dist^z to the nearest center."""
    centers = np.asarray(sorted(set(int(c) for c in centers)), dtype=np.int64)
    if centers.size == 0:
        raise InfeasibleError("empty center set")
    return math.fsum(np.concatenate([block[:, centers].min(axis=1) ** z for _, block in oracle.blocks()]))


def indicator(n: int, centers) -> np.ndarray:
    y = np.zeros(n)
    y[np.asarray(list(centers), dtype=np.int64)] = 1.0
    return y


def estimate_costs(oracle: DistanceOracle, y, gamma: float, z: int,
                   backend: PrimitiveBackend | None = None, with_exact: bool = False) -> CostReport:
    """Level-set cost estimate.

    With s_l = min(sum of y over A^(l)_p, 1) the estimate is
    sum over l >= 1 of (s_l - s_(l-1)) * gamma^(l z); it never undercuts the
    true cost and exceeds it by at most gamma^(2z).
    """
    backend = backend or PrimitiveBackend()
    y = check_mass(y)
    if not is_normalized(oracle):
        raise PreconditionError("cost estimation expects a normalized dataset (min distance >= 2)")
    L = level_depth(oracle, gamma)
    s = np.minimum(level_sums(oracle, y, gamma, L, backend), 1.0)
    s = np.maximum.accumulate(s, axis=1)
    weights = float(gamma) ** (z * np.arange(1, L + 1))
    est = np.diff(s, axis=1) @ weights
    report = CostReport(None, None, est, math.fsum(est), float(gamma), z)
    if with_exact:
        report.per_point = point_costs(oracle, y, z)
        report.total = math.fsum(report.per_point)
    return report
