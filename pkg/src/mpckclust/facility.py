"""Fractional Mettu-Plaxton facility location.

For opening cost ``lam`` and scale ``beta`` every point p gets the radius
r_p solving ``sum_q [r - beta * dist^z(p, q)]^+ = lam`` and opens with mass
``r_p / lam``. The left side is piecewise linear and increasing in r, so the
root is found exactly: sort the breakpoints ``beta * dist^z(p, .)`` and solve
the one linear piece that contains it.

``mp_level_variant`` is the version that only needs counts of points inside
geometrically growing balls, i.e. distances rounded up to the next power of
gamma.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .costs import Assignment
from .errors import ParameterError, PreconditionError
from .levels import level_depth, level_sums
from .metric import DistanceOracle, is_normalized
from .primitives import PrimitiveBackend


@dataclass(frozen=True)
class DerivedConstants:
    z: int
    gamma: float = 1.0

    @property
    def beta_star(self) -> float:
        return 2.0 ** (-self.z - 1)

    @property
    def gamma_star(self) -> float:
        return 2.0 ** (2 * self.z * self.z + self.z)

    @property
    def beta_robust(self) -> float:
        return 2.0 ** (-self.z - 1) * float(self.gamma) ** (-2 * self.z)


@dataclass(frozen=True)
class SolverParams:
    z: int
    lam: float
    beta: float
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.z) != self.z or self.z < 1:
            raise ParameterError(f"z must be an integer >= 1, got {self.z}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if not 0 < self.beta < 1:
            raise ParameterError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.gamma >= 1:
            raise ParameterError(f"gamma must be >= 1, got {self.gamma}")

    @classmethod
    def star(cls, z: int, lam: float) -> "SolverParams":
        return cls(z, lam, DerivedConstants(z).beta_star)

    @classmethod
    def robust(cls, z: int, lam: float, gamma: float) -> "SolverParams":
        return cls(z, lam, DerivedConstants(z, gamma).beta_robust, gamma)

    @property
    def constants(self) -> DerivedConstants:
        return DerivedConstants(self.z, self.gamma)


@dataclass
class RadiusProfile:
    beta: float
    lam: float
    z: int
    radii: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return self.radii / self.lam

    def to_json(self) -> str:
        return json.dumps({"beta": self.beta, "lam": self.lam, "z": self.z,
                           "radii": [float(r) for r in self.radii]})

    @classmethod
    def from_json(cls, text: str) -> "RadiusProfile":
        d = json.loads(text)
        return cls(d["beta"], d["lam"], d["z"], np.asarray(d["radii"], dtype=float))


def solve_breakpoints(B: np.ndarray, M: np.ndarray, lam: float) -> np.ndarray:
    """Row-wise root of ``sum_i M[i] * [r - B[i]]^+ = lam``.

    ``B`` is sorted ascending along each row, ``M`` holds nonnegative
    multiplicities and the first column must have positive multiplicity.
    On the piece [B_j, B_(j+1)] the left side is cm_j * r - cmb_j, so the
    candidate root is (lam + cmb_j) / cm_j; the first candidate not past the
    next breakpoint is the answer.
    """
    B = np.atleast_2d(B)
    M = np.broadcast_to(M, B.shape)
    cm = np.cumsum(M, axis=1)
    cmb = np.cumsum(M * B, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = (lam + cmb) / cm
    nxt = np.concatenate([B[:, 1:], np.full((B.shape[0], 1), np.inf)], axis=1)
    ok = (cm > 0) & (cand <= nxt)
    j = ok.argmax(axis=1)
    return cand[np.arange(B.shape[0]), j]


def radii_for_scale(oracle: DistanceOracle, lam: float, z: int, beta: float, rows=None) -> np.ndarray:
    """Radii at an arbitrary positive scale (the lemma checks also use beta >= 1)."""
    if not beta > 0 or not lam > 0:
        raise ParameterError("beta and lambda must be positive")
    parts = []
    for _, block in oracle.blocks(rows):
        parts.append(solve_breakpoints(np.sort(beta * block ** z, axis=1), 1.0, lam))
    return np.concatenate(parts)


def radius_profile(oracle: DistanceOracle, params: SolverParams) -> RadiusProfile:
    return RadiusProfile(params.beta, params.lam, params.z,
                         radii_for_scale(oracle, params.lam, params.z, params.beta))


def solve_radius(p: int, oracle: DistanceOracle, params: SolverParams) -> float:
    return float(radii_for_scale(oracle, params.lam, params.z, params.beta, rows=[p])[0])


def phi(oracle: DistanceOracle, radii, lam: float, z: int, beta: float) -> np.ndarray:
    """sum_q [r_p - beta dist^z(p, q)]^+ - lam for every p."""
    radii = np.asarray(radii, dtype=float)
    out = []
    for idx, block in oracle.blocks():
        out.append(np.maximum(radii[idx, None] - beta * block ** z, 0.0).sum(axis=1) - lam)
    return np.concatenate(out)


def mp_beta(oracle: DistanceOracle, params: SolverParams) -> np.ndarray:
    """Fractional Mettu-Plaxton opening vector ``r / lam``."""
    return radius_profile(oracle, params).y


@dataclass
class LevelProfile:
    L: int
    counts: np.ndarray
    gamma: float

    def to_dict(self) -> dict:
        return {"L": self.L, "gamma": self.gamma, "counts": self.counts.astype(int).tolist()}


def level_profile(oracle: DistanceOracle, gamma: float, backend: PrimitiveBackend | None = None) -> LevelProfile:
    backend = backend or PrimitiveBackend()
    if not is_normalized(oracle):
        raise PreconditionError("the level-set solver expects a normalized dataset (min distance >= 2)")
    L = level_depth(oracle, gamma)
    counts = np.rint(level_sums(oracle, np.ones(oracle.n), gamma, L, backend))
    return LevelProfile(L, counts, float(gamma))


def level_radii(levels: LevelProfile, lam: float, z: int, beta: float) -> np.ndarray:
    """Root of r + sum_l (|A^l| - |A^(l-1)|) [r - beta gamma^(l z)]^+ = lam per point."""
    B = np.concatenate([[0.0], beta * levels.gamma ** (z * np.arange(1, levels.L + 1, dtype=float))])
    M = np.diff(levels.counts, axis=1, prepend=0.0)
    return solve_breakpoints(np.broadcast_to(B, M.shape), M, lam)


def mp_level_variant(oracle: DistanceOracle, params: SolverParams,
                     backend: PrimitiveBackend | None = None,
                     levels: LevelProfile | None = None) -> tuple[np.ndarray, LevelProfile]:
    """Level-set Mettu-Plaxton. ``params.gamma`` is the level ratio (must exceed 1).

    A precomputed ``levels`` profile may be passed to avoid recounting when
    only ``lam`` changes.
    """
    if params.gamma <= 1:
        raise ParameterError("the level-set solver needs gamma > 1")
    if levels is None:
        levels = level_profile(oracle, params.gamma, backend)
    elif levels.gamma != params.gamma:
        raise ParameterError("level profile was built for a different gamma")
    r = level_radii(levels, params.lam, params.z, params.beta)
    return r / params.lam, levels


def infeasible_assignment(profile: RadiusProfile, oracle: DistanceOracle) -> Assignment:
    """x[p, q] = [r_p - beta dist^z(p, q)]^+ / lam. Rows sum to one; may exceed y."""
    ps, qs, xs = [], [], []
    for idx, block in oracle.blocks():
        x = np.maximum(profile.radii[idx, None] - profile.beta * block ** profile.z, 0.0) / profile.lam
        r, c = np.nonzero(x)
        ps.append(idx[r])
        qs.append(c)
        xs.append(x[r, c])
    return Assignment(oracle.n, np.concatenate(ps), np.concatenate(qs), np.concatenate(xs))
