"""Numerical checks of the structural facts about Mettu-Plaxton radii.

Every check compares a left side against a right side for many (p, q, beta)
combinations and keeps the worst slack ``rhs - lhs``. A check passes when no
slack is below ``-tol * scale`` for the local magnitude ``scale``. Failures
are data in the report, not exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .costs import Assignment
from .facility import DerivedConstants, RadiusProfile, infeasible_assignment, radii_for_scale
from .metric import DistanceOracle

TOL = 1e-9


@dataclass
class PropertyEntry:
    name: str
    passed: bool = True
    worst_slack: float = math.inf
    checked: int = 0
    skipped: int = 0
    note: str = ""

    def update(self, lhs, rhs, scale=None):
        lhs = np.asarray(lhs, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        if lhs.size == 0:
            return
        if scale is None:
            scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1.0)
        slack = rhs - lhs
        self.checked += int(slack.size)
        self.worst_slack = min(self.worst_slack, float(np.min(slack / scale)))
        if np.any(slack < -TOL * scale):
            self.passed = False


@dataclass
class PropertyReport:
    entries: dict = field(default_factory=dict)

    def entry(self, name: str) -> PropertyEntry:
        if name not in self.entries:
            self.entries[name] = PropertyEntry(name)
        return self.entries[name]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries.values())

    def failures(self) -> list[str]:
        return [e.name for e in self.entries.values() if not e.passed]

    def merge(self, other: "PropertyReport"):
        for name, e in other.entries.items():
            mine = self.entry(name)
            mine.passed &= e.passed
            mine.worst_slack = min(mine.worst_slack, e.worst_slack)
            mine.checked += e.checked
            mine.skipped += e.skipped
            mine.note = mine.note or e.note
        return self

    def rows(self) -> list[dict]:
        return [{"property": e.name, "passed": e.passed, "worst_slack": e.worst_slack,
                 "checked": e.checked, "skipped": e.skipped} for e in self.entries.values()]


def check_structural_properties(oracle: DistanceOracle, lam: float, z: int, scales,
                                profiles: dict | None = None) -> PropertyReport:
    """Evaluate the radius inequalities on an undistorted oracle.

    ``profiles`` maps a scale to a radius vector that replaces the solved one
    (used to confirm that corrupted radii are caught).
    """
    profiles = profiles or {}
    D = oracle.matrix()
    Dz = D ** z
    n = oracle.n
    c = 2.0 ** (z - 1)
    gstar = DerivedConstants(z).gamma_star
    rep = PropertyReport()

    cache: dict = {}

    def radii(beta):
        if beta in profiles:
            return np.asarray(profiles[beta], dtype=float)
        if beta not in cache:
            cache[beta] = radii_for_scale(oracle, lam, z, beta)
        return cache[beta]

    scales = sorted(set(float(b) for b in scales))
    for beta in scales:
        r = radii(beta)
        bd = beta * Dz

        # defining equation residual
        res = np.maximum(r[:, None] - bd, 0).sum(axis=1) - lam
        e = rep.entry("radius_residual")
        e.update(np.abs(res), np.zeros(n), scale=np.full(n, lam))

        # ball size: |B_p(t)| <= lam / (r_p - t) for t in (0, r_p)
        e = rep.entry("ball_size")
        for frac in (0.25, 0.5, 0.75):
            t = frac * r
            size = (bd <= t[:, None]).sum(axis=1)
            e.update(size, lam / (r - t))

        # location smoothness, all ordered pairs (p, q)
        e = rep.entry("location_smoothness")
        outer = c * (r[None, :] + bd)
        if c * beta < 1:
            mid = radii(c * beta)[None, :] + c * bd
            e.update(np.broadcast_to(r[:, None], (n, n)), mid)
            e.update(mid, outer)
        else:
            e.update(np.broadcast_to(r[:, None], (n, n)), outer)
            e.skipped += n * n
            e.note = "middle term skipped where 2^(z-1) beta >= 1"

        # additive smoothness with the ball/ring correction around q
        e = rep.entry("additive_smoothness")
        half = r / 2
        in_ball = bd <= half[:, None]          # row q: t in B_q(r_q/2)
        in_ring = (bd > half[:, None]) & (bd <= r[:, None])
        corr = ((c - 1) * np.where(in_ball, bd, 0).sum(axis=1)
                + np.where(in_ring, r[:, None] - bd, 0).sum(axis=1)) / in_ball.sum(axis=1)
        rhs = r[None, :] + c * bd + corr[None, :]
        e.update(np.broadcast_to(r[:, None], (n, n)), rhs)

        # local density with gamma*
        e = rep.entry("local_density")
        mass = np.where(bd <= gstar * r[:, None], r[None, :], 0).sum(axis=1)
        e.update(np.full(n, lam), mass)

        # bound against the doubled scale
        e = rep.entry("doubling_bound")
        x = np.maximum(r[:, None] - bd, 0) / lam
        lhs = r + (x * bd).sum(axis=1)
        e.update(lhs, radii(2 * beta))

    # scale monotonicity across pairs beta >= beta'
    e = rep.entry("scale_monotonicity")
    for i, b_small in enumerate(scales):
        for b_big in scales[i + 1:]:
            r_big, r_small = radii(b_big), radii(b_small)
            e.update((b_small / b_big) * r_big, r_small)
            e.update(r_small, r_big)
    return rep


# -- feasibility certificate and duality ---------------------------------------------


@dataclass
class FeasibilityCertificate:
    mu: np.ndarray
    x: Assignment
    y: np.ndarray


def certificate_from_profile(oracle: DistanceOracle, profile: RadiusProfile) -> FeasibilityCertificate:
    """mu = gamma* / beta * r, x = the canonical infeasible assignment, y = r / lam."""
    gstar = DerivedConstants(profile.z).gamma_star
    return FeasibilityCertificate(gstar / profile.beta * profile.radii,
                                  infeasible_assignment(profile, oracle), profile.y)


def certificate_premises(oracle: DistanceOracle, cert: FeasibilityCertificate, z: int) -> dict:
    """Slack of the three premises (all should be >= 0 up to rounding)."""
    Dz = oracle.matrix() ** z
    near = Dz <= cert.mu[:, None] * (1 + TOL)
    cover = (near * cert.y[None, :]).sum(axis=1) - 1
    rows = cert.x.row_sums() - 1
    dense = cert.x.to_dense()
    support_ok = np.where(dense > 0, cert.mu[:, None] * (1 + TOL) - Dz, np.inf)
    return {"cover": float(cover.min()), "row_sum": float(np.abs(rows).max()),
            "support": float(support_ok.min())}


def additive_error_bound(oracle: DistanceOracle, cert: FeasibilityCertificate, z: int) -> float:
    """sigma(x) + sum_{p,q} [x_pq - y_q]^+ mu_p, an upper bound on cost(y)."""
    dense = cert.x.to_dense()
    excess = np.maximum(dense - cert.y[None, :], 0)
    return cert.x.sigma(oracle, z) + math.fsum((excess * cert.mu[:, None]).ravel())


def dual_vector(oracle: DistanceOracle, lam: float, z: int, beta: float) -> np.ndarray:
    """The doubled-scale radii, a feasible dual solution whenever beta <= 2^(-z-1)."""
    return radii_for_scale(oracle, lam, z, 2 * beta)


def dual_violation(oracle: DistanceOracle, v, lam: float, z: int) -> float:
    """max_q sum_p [v_p - dist^z(p, q)]^+ - lam (<= 0 means dual feasible)."""
    Dz = oracle.matrix() ** z
    return float((np.maximum(np.asarray(v)[:, None] - Dz, 0).sum(axis=0) - lam).max())
