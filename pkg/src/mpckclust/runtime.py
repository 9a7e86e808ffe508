"""Execution of the pipeline's data-movement steps.

The rounding and sweep code never sorts, groups or sums across points
directly. It asks a runtime, so the same code runs offline (this module) or
on the MPC simulator (``mpc.MpcRuntime``) with identical results. Float
totals go through ``math.fsum``, which is correctly rounded and therefore
independent of summation order; the simulator reproduces it with exact
rational partial sums.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field, asdict


@dataclass
class Charge:
    primitive: str
    rounds: int
    memory: int
    invocations: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CostModel:
    """Rounds and total memory charged per primitive invocation.

    rounds = coeff * ceil(log_s n) and memory = factor * n^(1+eps) * ceil(log2 n),
    with ``table[primitive] = (coeff, factor)``.
    """

    table: dict = field(default_factory=lambda: {
        "ruling_set": (2, 1.0),
        "range_sum": (1, 1.0),
        "ann": (1, 1.0),
    })
    epsilon: float = 0.1

    def rounds(self, primitive: str, n: int, s: int) -> int:
        coeff = self.table[primitive][0]
        return coeff * log_ceil(n, s)

    def memory(self, primitive: str, n: int) -> int:
        factor = self.table[primitive][1]
        return int(math.ceil(factor * max(n, 1) ** (1 + self.epsilon) * max(1, math.ceil(math.log2(max(n, 2))))))


def log_ceil(n: int, s: int) -> int:
    """ceil(log_s n), at least 1, computed without float drift."""
    if s < 2:
        raise ValueError("s must be at least 2")
    r, power = 0, 1
    while power < n:
        power *= s
        r += 1
    return max(r, 1)


class LocalRuntime:
    """Offline runtime; records primitive charges when asked to."""

    def __init__(self, s: int | None = None):
        self.s = s
        self.charges: list[Charge] = []
        self._batch: list[Charge] | None = None

    # accounting

    def charge(self, primitive: str, n: int, cost_model: CostModel, invocations: int = 1):
        s = self.s or max(2, int(math.isqrt(max(n, 4))))
        c = Charge(primitive, cost_model.rounds(primitive, n, s),
                   cost_model.memory(primitive, n) * invocations, invocations)
        if self._batch is not None:
            self._batch.append(c)
        else:
            self._record(c)

    def _record(self, c: Charge):
        self.charges.append(c)

    @contextmanager
    def parallel(self, label: str = "batch"):
        """Invocations inside the block run side by side: rounds add as a max."""
        if self._batch is not None:
            yield
            return
        self._batch = []
        try:
            yield
        finally:
            batch, self._batch = self._batch, None
            if batch:
                prims = sorted({c.primitive for c in batch})
                self._record(Charge("+".join(prims) if len(prims) > 1 else prims[0],
                                    max(c.rounds for c in batch),
                                    sum(c.memory for c in batch),
                                    sum(c.invocations for c in batch)))

    # data movement

    def fsum(self, values) -> float:
        return math.fsum(values)

    def fsums(self, columns) -> list[float]:
        """Correctly rounded sum of each array in ``columns``."""
        return [math.fsum(col) for col in columns]

    def sort_order(self, keys: list[tuple]) -> list[int]:
        """Positions of ``keys`` in ascending lexicographic order (keys are distinct)."""
        return sorted(range(len(keys)), key=keys.__getitem__)

    def group_reduce(self, groups, values, op: str) -> dict:
        """Reduce ``values`` per group key. ``op`` is one of sum, min, count, or."""
        out: dict = {}
        if op == "sum":
            parts: dict = {}
            for g, v in zip(groups, values):
                parts.setdefault(g, []).append(v)
            return {g: math.fsum(vs) for g, vs in parts.items()}
        for g, v in zip(groups, values):
            if g not in out:
                out[g] = 1 if op == "count" else v
            elif op == "count":
                out[g] += 1
            elif op == "min":
                out[g] = min(out[g], v)
            elif op == "or":
                out[g] |= v
            else:
                raise ValueError(f"unknown reduce op {op!r}")
        return out
