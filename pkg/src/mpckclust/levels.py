"""Geometric level sets A^(l)_p = {q : dist(p, q) <= gamma^l}.

Shared by the level-set facility solver and the cost estimator.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .metric import REL_TOL, DistanceOracle, pair_extremes
from .primitives import PrimitiveBackend, range_sums


def ceil_log(x: float, base: float) -> int:
    """Smallest integer e >= 0 with base**e >= x (relative tolerance on the comparison)."""
    if base <= 1:
        raise ParameterError(f"level base must exceed 1, got {base}")
    e = 0
    while base ** e < x * (1 - REL_TOL):
        e += 1
    return e


def level_depth(oracle: DistanceOracle, gamma: float) -> int:
    """L = max(1, ceil(log_gamma(max distance)) + 1), so that A^(L)_p = P."""
    _, hi = pair_extremes(oracle)
    return max(1, ceil_log(max(hi, 1.0), gamma) + 1)


def level_sums(oracle: DistanceOracle, values, gamma: float, L: int, backend: PrimitiveBackend) -> np.ndarray:
    """``out[p, l] = sum of values over A^(l)_p`` for l in 0..L, via range queries.

    An exact backend is queried at radius gamma^l. A backend with range
    slack answers somewhere up to gamma times the radius, so it is queried at
    gamma^(l-1); either way the returned set sits between the radius-gamma^(l-1)
    and radius-gamma^l balls.
    """
    if gamma <= 1:
        raise ParameterError(f"level structures need gamma > 1, got {gamma}")
    exps = np.arange(L + 1, dtype=float)
    if backend.mode == "cost_modeled" and backend.range_slack:
        if backend.gamma > gamma:
            raise ParameterError("backend range slack exceeds the level ratio gamma")
        exps = exps - 1
    return range_sums(oracle, values, gamma ** exps, backend)
