"""Fractional (k, z)-clustering by sweeping the opening cost.

Facility-location solutions for lam = 2^(l z), l = 0..L, have total masses
that start at n and end below 2. The sweep picks the first adjacent pair
straddling k and blends the two solutions so the mass is exactly k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .costs import estimate_costs, indicator, point_costs
from .errors import ParameterError, PreconditionError
from .facility import SolverParams, level_profile, level_radii
from .metric import REL_TOL, DistanceOracle, is_normalized, pair_extremes
from .primitives import PrimitiveBackend


@dataclass
class SweepTrace:
    L: int
    lambdas: list
    masses: list
    ell_star: int
    alpha: float
    gamma: float
    k: int
    z: int
    y_prev: np.ndarray | None = field(default=None, repr=False)
    y_next: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"L": self.L, "lambdas": self.lambdas, "masses": self.masses,
                "ell_star": self.ell_star, "alpha": self.alpha, "gamma": self.gamma,
                "k": self.k, "z": self.z}


def sweep_depth(n: int, max_dist: float, z: int) -> int:
    """Smallest L with 2^(L z) > 2 n max_dist^z."""
    target = 2 * n * max_dist ** z
    L = 1
    while 2.0 ** (L * z) <= target:
        L += 1
    return L


def fractional_kz(oracle: DistanceOracle, k: int, z: int, gamma: float,
                  backend: PrimitiveBackend | None = None) -> tuple[np.ndarray, SweepTrace]:
    backend = backend or PrimitiveBackend()
    n = oracle.n
    if not 2 <= k <= n:
        raise ParameterError(f"fractional_kz needs 2 <= k <= n, got k={k}, n={n}")
    if not is_normalized(oracle):
        raise PreconditionError("fractional_kz expects a normalized dataset (min distance >= 2)")
    _, hi = pair_extremes(oracle)
    L = sweep_depth(n, hi, z)
    levels = level_profile(oracle, gamma, backend)
    lambdas = [2.0 ** (ell * z) for ell in range(L + 1)]
    ys = [np.ones(n)]
    for lam in lambdas[1:]:
        params = SolverParams.robust(z, lam, gamma)
        ys.append(level_radii(levels, lam, z, params.beta) / lam)
    masses = backend.runtime.fsums(ys)

    tol = REL_TOL * k
    ell_star = next(ell for ell in range(1, L + 1)
                    if masses[ell - 1] >= k - tol and masses[ell] <= k + tol)
    hi_mass, lo_mass = masses[ell_star - 1], masses[ell_star]
    if hi_mass == lo_mass:
        alpha = 1.0
    else:
        alpha = min(1.0, max(0.0, (k - lo_mass) / (hi_mass - lo_mass)))
    y = alpha * ys[ell_star - 1] + (1 - alpha) * ys[ell_star]
    trace = SweepTrace(L, lambdas, masses, ell_star, alpha, float(gamma), k, z,
                       ys[ell_star - 1], ys[ell_star])
    return y, trace


def default_repeats(n: int) -> int:
    return math.ceil(3 * math.log(max(n, 1))) + 1


def sample_k1(oracle: DistanceOracle, z: int, repeats: int | None = None,
              seed: int = 0, backend: PrimitiveBackend | None = None) -> tuple[np.ndarray, float]:
    """Best of ``repeats`` uniformly drawn single centers."""
    backend = backend or PrimitiveBackend()
    n = oracle.n
    repeats = default_repeats(n) if repeats is None else repeats
    if repeats < 1:
        raise ParameterError("repeats must be >= 1")
    rng = np.random.default_rng(seed)
    candidates = rng.integers(0, n, size=repeats)
    costs = [backend.runtime.fsum(point_costs(oracle, indicator(n, [c]), z)) for c in candidates]
    i = int(np.argmin(costs))
    return indicator(n, [candidates[i]]), costs[i]


@dataclass
class ValueEstimate:
    eta: float
    alpha_scale: float
    per_point: np.ndarray
    k: int
    z: int
    gamma: float
    trace: SweepTrace | None = None

    def to_dict(self) -> dict:
        return {"eta": self.eta, "alpha_scale": self.alpha_scale, "k": self.k, "z": self.z,
                "gamma": self.gamma, "trace": None if self.trace is None else self.trace.to_dict()}


def estimate_opt_value(oracle: DistanceOracle, k: int, z: int, gamma: float,
                       backend: PrimitiveBackend | None = None,
                       alpha_scale: float | None = None, seed: int = 0) -> ValueEstimate:
    """eta = alpha_scale * (sum of level-set cost estimates of the sweep solution)."""
    backend = backend or PrimitiveBackend()
    alpha_scale = 2.0 ** (2 * z) if alpha_scale is None else float(alpha_scale)
    if k == 1:
        y, _ = sample_k1(oracle, z, seed=seed, backend=backend)
        trace = None
    else:
        y, trace = fractional_kz(oracle, k, z, gamma, backend)
    est = estimate_costs(oracle, y, gamma, z, backend).estimated_per_point
    eta = alpha_scale * backend.runtime.fsum(est)
    return ValueEstimate(eta, alpha_scale, est, k, z, float(gamma), trace)
