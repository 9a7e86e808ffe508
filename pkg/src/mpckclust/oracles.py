"""Ground-truth optima for small instances.

``brute_opt_integral`` enumerates center sets. The two LP oracles solve the
facility-location and clustering relaxations over the full n + n^2 variable
formulation with HiGHS (through scipy).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, vstack

from .costs import Assignment
from .errors import GuardError, ParameterError
from .metric import DistanceOracle

ENUM_LIMIT = 10 ** 7
LP_LIMIT = 12
LP_TOL = 1e-7


@dataclass
class OracleResult:
    value: float
    witness: object
    method: str
    assignment: Assignment | None = None

    def to_dict(self) -> dict:
        w = self.witness
        w = [int(c) for c in w] if self.method == "enumeration" else [float(v) for v in w]
        return {"value": self.value, "witness": w, "method": self.method}


def brute_opt_integral(oracle: DistanceOracle, k: int, z: int) -> OracleResult:
    """Exact min over center sets of size at most k (size exactly min(k, n) suffices)."""
    n = oracle.n
    if k < 1:
        raise ParameterError("k must be >= 1")
    k = min(k, n)
    if math.comb(n, k) > ENUM_LIMIT:
        raise GuardError(f"C({n}, {k}) exceeds the enumeration guard {ENUM_LIMIT}")
    Dz = oracle.matrix() ** z
    best, arg = math.inf, None
    for C in itertools.combinations(range(n), k):
        v = math.fsum(Dz[:, C].min(axis=1))
        if v < best:
            best, arg = v, C
    return OracleResult(best, list(arg), "enumeration")


def _lp_blocks(n: int, Dz: np.ndarray):
    """Shared constraints. Variable order: y_0..y_{n-1}, then x_pq row-major."""
    nv = n + n * n
    # assignment rows: -sum_q x_pq <= -1
    rows = np.repeat(np.arange(n), n)
    cols = n + np.arange(n * n)
    A_assign = coo_matrix((-np.ones(n * n), (rows, cols)), shape=(n, nv))
    # capacity rows: x_pq - y_q <= 0
    r = np.arange(n * n)
    q = np.tile(np.arange(n), n)
    A_cap = coo_matrix((np.concatenate([np.ones(n * n), -np.ones(n * n)]),
                        (np.concatenate([r, r]), np.concatenate([n + r, q]))), shape=(n * n, nv))
    A_ub = vstack([A_assign, A_cap]).tocsr()
    b_ub = np.concatenate([-np.ones(n), np.zeros(n * n)])
    cost = np.concatenate([np.zeros(n), Dz.ravel()])
    return A_ub, b_ub, cost


def _solve(c, A_ub, b_ub, A_eq=None, b_eq=None):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return res


def _guard(n: int):
    if n > LP_LIMIT:
        raise GuardError(f"LP oracle is limited to n <= {LP_LIMIT}, got {n}")


def _result(res, n: int, value: float) -> OracleResult:
    y = np.maximum(res.x[:n], 0.0)
    X = np.maximum(res.x[n:].reshape(n, n), 0.0)
    return OracleResult(value, y, "lp", Assignment.from_dense(X))


def lp_opt_fractional_fl(oracle: DistanceOracle, lam: float, z: int) -> OracleResult:
    """min lam * sum y + sum x_pq dist^z  s.t.  sum_q x_pq >= 1,  x_pq <= y_q,  x, y >= 0."""
    n = oracle.n
    _guard(n)
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    Dz = oracle.matrix() ** z
    A_ub, b_ub, cost = _lp_blocks(n, Dz)
    cost[:n] = lam
    res = _solve(cost, A_ub, b_ub)
    return _result(res, n, float(res.fun))


def lp_opt_fractional_clustering(oracle: DistanceOracle, k: float, z: int) -> OracleResult:
    """min sum x_pq dist^z  s.t.  sum y = k,  sum_q x_pq >= 1,  x_pq <= y_q,  x, y >= 0."""
    n = oracle.n
    _guard(n)
    if not 0 < k <= n:
        raise ParameterError(f"need 0 < k <= n, got k={k}")
    Dz = oracle.matrix() ** z
    A_ub, b_ub, cost = _lp_blocks(n, Dz)
    A_eq = coo_matrix((np.ones(n), (np.zeros(n, dtype=int), np.arange(n))), shape=(1, n + n * n))
    res = _solve(cost, A_ub, b_ub, A_eq, [float(k)])
    return _result(res, n, float(res.fun))


def best_integral_fl(oracle: DistanceOracle, lam: float, z: int) -> OracleResult:
    """Integral facility location by enumerating every nonempty open set (small n only)."""
    n = oracle.n
    if 2 ** n > ENUM_LIMIT:
        raise GuardError("too many subsets to enumerate")
    Dz = oracle.matrix() ** z
    best, arg = math.inf, None
    for size in range(1, n + 1):
        for C in itertools.combinations(range(n), size):
            v = lam * size + math.fsum(Dz[:, C].min(axis=1))
            if v < best:
                best, arg = v, C
    return OracleResult(best, list(arg), "enumeration")


def dual_objective(v) -> float:
    return math.fsum(np.asarray(v, dtype=float))
