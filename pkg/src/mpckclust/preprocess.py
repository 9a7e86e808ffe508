"""Dimension and aspect-ratio reduction.

``reduce_aspect_ratio`` compresses large coordinate gaps and then snaps every
point to its own shifted grid. Gaps wider than ``(alpha' * eta)^(1/z)`` carry
no information about a good clustering (eta bounds OPT from above), so they
are clipped; the per-point grid offsets keep images distinct, which bounds
the minimum distance from below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .metric import Dataset, EuclideanOracle, aspect_ratio


def gonzalez(oracle, k: int) -> tuple[list[int], float]:
    """Farthest-point traversal from point 0 (ties to the smallest id).

    Returns the k chosen centers and the covering radius, a 2-approximation
    of the optimal k-center radius.
    """
    n = oracle.n
    if not 1 <= k:
        raise ParameterError("k must be >= 1")
    centers = [0]
    near = oracle.rows([0])[0].copy()
    while len(centers) < min(k, n):
        far = int(np.argmax(near))
        if near[far] == 0:
            break
        centers.append(far)
        near = np.minimum(near, oracle.rows([far])[0])
    return centers, float(near.max())


@dataclass
class PreprocessTrace:
    T: np.ndarray
    h_values: np.ndarray
    eta: float
    beta: float
    alpha_prime: float
    side: float
    offset_unit: float
    g: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    aspect_before: float
    aspect_after: float
    bound: float
    identity: bool = False

    def h(self, x):
        """The clipped-gap map, defined on the coordinate multiset."""
        idx = np.searchsorted(self.T, x)
        if np.any(idx >= self.T.size) or np.any(self.T[np.minimum(idx, self.T.size - 1)] != x):
            raise ParameterError("h is only defined on input coordinates")
        return self.h_values[idx]

    def pullback(self, ids) -> list[int]:
        """Images keep their point ids, so pulling back a center set is the identity on ids."""
        return sorted(int(i) for i in ids)

    def to_dict(self) -> dict:
        return {"m": int(self.T.size), "eta": self.eta, "beta": self.beta, "alpha_prime": self.alpha_prime,
                "side": self.side, "offset_unit": self.offset_unit, "aspect_before": self.aspect_before,
                "aspect_after": self.aspect_after, "bound": self.bound, "identity": self.identity}


def clipped_gaps(T: np.ndarray, cap: float) -> np.ndarray:
    """h(t_i) = t_1 + sum_{j <= i} min(t_j - t_(j-1), cap)."""
    gaps = np.minimum(np.diff(T), cap)
    return T[0] + np.concatenate([[0.0], np.cumsum(gaps)])


def aspect_bound(n: int, d: int, m: int, alpha_prime: float, beta: float, z: int) -> float:
    """Guaranteed aspect ratio of the output: n^3 + n^4 sqrt(d) m (alpha' beta)^(1/z)."""
    return n ** 3 + n ** 4 * math.sqrt(d) * m * (alpha_prime * beta) ** (1.0 / z)


def reduce_aspect_ratio(P: Dataset, k: int, z: int, alpha: float = 1.0) -> tuple[Dataset, PreprocessTrace]:
    n, d = P.n, P.dim
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    if alpha < 1:
        raise ParameterError("alpha must be >= 1")
    if n < 2:
        raise ParameterError("need at least two points")
    oracle = EuclideanOracle(P)
    before = aspect_ratio(oracle)
    _, E = gonzalez(oracle, k)
    beta = n * 2.0 ** z
    alpha_prime = 2.0 ** (3 * z + 1) * alpha
    T = np.unique(P.points)
    if E == 0:
        # at most k distinct locations: OPT = 0 and any injective relabeling works
        pts = P.points.copy()
        return P, PreprocessTrace(T, T.copy(), 0.0, beta, alpha_prime, 0.0, 0.0, pts, pts,
                                  before, before, before, identity=True)
    eta = n * E ** z
    hT = clipped_gaps(T, (alpha_prime * eta) ** (1.0 / z))
    g = hT[np.searchsorted(T, P.points)]
    side = eta ** (1.0 / z) / (n * math.sqrt(d) * beta ** (1.0 / z))
    unit = side / n ** 3
    off = (np.arange(1, n + 1) * unit)[:, None]
    f = np.rint((g - off) / side) * side + off
    out = Dataset(f)
    after = aspect_ratio(EuclideanOracle(out))
    bound = aspect_bound(n, d, T.size, alpha_prime, beta, z)
    trace = PreprocessTrace(T, hT, eta, beta, alpha_prime, side, unit, g, f, before, after, bound)
    return out, trace


def jl_project(P: Dataset, target_dim: int, seed: int = 0, identity: bool = False) -> Dataset:
    """Gaussian random projection scaled by 1/sqrt(target_dim).

    ``identity=True`` is a debug mode that returns the points unchanged and
    requires ``target_dim == d``.
    """
    if target_dim < 1:
        raise ParameterError("target_dim must be >= 1")
    if identity:
        if target_dim != P.dim:
            raise ParameterError("identity projection needs target_dim == d")
        return Dataset(P.points.copy())
    G = np.random.default_rng(seed).standard_normal((P.dim, target_dim))
    return Dataset(P.points @ G / math.sqrt(target_dim))
