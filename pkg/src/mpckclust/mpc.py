"""Bulk-synchronous MPC simulator.

Machines hold at most ``s`` words. A superstep delivers messages; every
machine's sent words, received words and resident words (persistent point
records + operation data + auxiliary state) are checked against ``s`` and a
violation raises :class:`CapacityError`.

What is simulated message by message:

* ``mpc_sort``: sample sort with exact rebalancing. Each level, every group
  (a contiguous rank range spanning several machines) gathers weighted
  samples up an f-ary tree, broadcasts splitters down, computes per-bucket
  prefix counts with an up/down sweep and routes each item to the machine
  owning its new rank. Groups that fit on one machine are sorted locally.
* ``mpc_aggregate``: sort by (group, sequence) then a segmented converge-cast
  so groups straddling machine boundaries are combined.
* ``allreduce``: tree reduction and broadcast of a vector, chunked to fit.

Geometric primitives are not simulated; they execute offline and charge the
rounds/memory of the backend cost model.

Budget split per machine: a quarter of ``s`` for persistent point records,
a quarter for operation data and the rest for in-flight auxiliary state.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CapacityError, ConfigurationError, PreconditionError
from .metric import DistanceOracle, EuclideanOracle, Dataset, is_normalized
from .primitives import PrimitiveBackend
from .runtime import Charge, LocalRuntime


def polylog_floor(n: int) -> int:
    """Smallest admissible local memory for n points: 4 * ceil(log2(n + 1)), at least 16."""
    return max(16, 4 * math.ceil(math.log2(n + 1)))


@dataclass
class MpcConfig:
    s: int
    machine_count: int
    seed: int = 0

    def __post_init__(self):
        if self.s < 16:
            raise ConfigurationError(f"local memory s={self.s} is below the absolute minimum of 16 words")
        if self.machine_count < 1:
            raise ConfigurationError("machine_count must be positive")

    @classmethod
    def auto(cls, s: int, n: int, seed: int = 0, slack: int = 4) -> "MpcConfig":
        """Enough machines for n point records and any n-item operation."""
        return cls(s, max(1, slack * math.ceil(16 * n / s)), seed)

    def check_input(self, n: int, words: int):
        floor = polylog_floor(n)
        if self.s < floor:
            raise ConfigurationError(f"s={self.s} is below the polylog floor {floor} for n={n}")
        if self.machine_count * self.s < words:
            raise CapacityError(f"{self.machine_count} machines x {self.s} words cannot hold {words} input words")


@dataclass
class RunStats:
    rounds: int = 0
    peak_local: int = 0
    total_memory: int = 0
    supersteps: int = 0
    charges: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rounds": self.rounds, "peak_local": self.peak_local,
                "total_memory": self.total_memory, "supersteps": self.supersteps,
                "charges": [{"primitive": c.primitive, "rounds": c.rounds, "memory": c.memory}
                            for c in self.charges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "RunStats":
        return cls(d["rounds"], d["peak_local"], d["total_memory"], d.get("supersteps", 0),
                   [Charge(c["primitive"], c["rounds"], c["memory"]) for c in d["charges"]])


def _sample_fan_in(s: int, w: int) -> int:
    """Largest f with (f - 1) children each sending f weighted samples in s / 4 words."""
    budget = s // 4
    if 2 * (w + 1) > budget:
        raise ConfigurationError(f"{w}-word sort keys leave no room for samples at s={s}")
    f = 2
    while f * (f + 1) * (w + 1) <= budget:
        f += 1
    return f


def _depth(G: int, f: int) -> int:
    d, span = 0, 1
    while span < G:
        span *= f
        d += 1
    return d


def _fan_in(s: int, msg_words: int) -> int:
    """Largest f >= 2 such that f - 1 messages of ``msg_words`` fit in a quarter of s."""
    budget = s // 4
    if msg_words > budget:
        raise ConfigurationError(f"a {msg_words}-word message does not fit the {budget}-word receive budget (s={s})")
    return max(2, 1 + budget // msg_words)


class Simulator:
    def __init__(self, config: MpcConfig, persistent=None):
        self.config = config
        self.s = config.s
        self.M = config.machine_count
        self.persistent = np.zeros(self.M, dtype=np.int64)
        if persistent is not None:
            persistent = np.asarray(persistent, dtype=np.int64)
            if persistent.size > self.M:
                raise CapacityError("not enough machines for the point records")
            self.persistent[:persistent.size] = persistent
        if self.persistent.max(initial=0) > self.s:
            raise CapacityError("point records exceed local memory")
        self.stats = RunStats(peak_local=int(self.persistent.max(initial=0)),
                              total_memory=int(self.persistent.sum()))

    # accounting -------------------------------------------------------------------

    def superstep(self, sent: dict, received: dict, resident: dict):
        s = self.s
        for m, wds in sent.items():
            if wds > s:
                raise CapacityError(f"machine {m} sends {wds} words in one round (s={s})")
        for m, wds in received.items():
            if wds > s:
                raise CapacityError(f"machine {m} receives {wds} words in one round (s={s})")
        self._observe(resident)
        self.stats.supersteps += 1
        self.stats.rounds += 1

    def _observe(self, resident: dict):
        total = int(self.persistent.sum())
        for m, wds in resident.items():
            load = int(self.persistent[m]) + wds
            if load > self.s:
                raise CapacityError(f"machine {m} holds {load} words (s={self.s})")
            self.stats.peak_local = max(self.stats.peak_local, load)
            total += wds
        self.stats.total_memory = max(self.stats.total_memory, total)

    def add_charge(self, c: Charge):
        self.stats.charges.append(c)
        self.stats.rounds += c.rounds
        self.stats.total_memory = max(self.stats.total_memory, c.memory)

    def op_load(self, w: int) -> int:
        if w > self.s // 4:
            raise ConfigurationError(f"{w}-word items do not fit the data budget of s={self.s}")
        return max(1, (self.s // 4) // w)

    def place(self, count: int, w: int) -> int:
        load = self.op_load(w)
        need = math.ceil(count / load) if count else 0
        if need > self.M:
            raise CapacityError(f"{count} items of {w} words need {need} machines, have {self.M}")
        return load

    # sort ------------------------------------------------------------------------

    def sort(self, items: list) -> list:
        """Globally sort distinct tuples of equal length; returns them in order."""
        N = len(items)
        if N == 0:
            return []
        w = len(items[0])
        load = self.place(N, w)
        f = _sample_fan_in(self.s, w)
        store = [items[i:i + load] for i in range(0, N, load)]
        self._observe({m: len(b) * w for m, b in enumerate(store)})
        groups = [(0, N)]
        while True:
            groups = [(b, c) for b, c in groups if b // load != (b + c - 1) // load]
            if not groups:
                break
            groups = self._sort_level(store, groups, load, w, f)
        out = []
        for b in store:
            b.sort()
            out.extend(b)
        return out

    def _sort_level(self, store, groups, load, w, f):
        """One bucketing level for all unfinished groups; returns the new groups."""
        infos = []
        for base, size in groups:
            lo, hi = base // load, (base + size - 1) // load
            G = hi - lo + 1
            local = {}
            for m in range(lo, hi + 1):
                start = max(base, m * load) - m * load
                stop = min(base + size, (m + 1) * load) - m * load
                local[m] = sorted(store[m][start:stop])
            infos.append({"base": base, "size": size, "lo": lo, "G": G, "D": _depth(G, f),
                          "local": local, "b": min(f, size)})
        data_words = {m: len(b) * w for m, b in enumerate(store)}
        D = max(g["D"] for g in infos)

        # 1. gather weighted samples to each group's first machine
        for g in infos:
            g["summary"] = {}
            for m, L in g["local"].items():
                g["summary"][m] = _regular_samples(L, f)
        for t in range(D):
            sent, recv, aux = {}, {}, {}
            for g in infos:
                if t >= g["D"]:
                    continue
                step, block = f ** t, f ** (t + 1)
                for rel in range(0, g["G"], step):
                    if rel % block == 0:
                        continue
                    src, dst = g["lo"] + rel, g["lo"] + rel - rel % block
                    msg = g["summary"].pop(src)
                    words = len(msg) * (w + 1)
                    sent[src] = sent.get(src, 0) + words
                    recv[dst] = recv.get(dst, 0) + words
                    g["summary"][dst] = g["summary"][dst] + msg
                for m, smp in g["summary"].items():
                    aux[m] = aux.get(m, 0) + len(smp) * (w + 1)
            self.superstep(sent, recv, _plus(data_words, aux))
            for g in infos:
                for m in list(g["summary"]):
                    g["summary"][m] = _compress(g["summary"][m], f)

        # 2. root picks splitters; broadcast down the tree
        for g in infos:
            g["splitters"] = _splitters(g["summary"][g["lo"]], g["b"])
        for t in reversed(range(D)):
            sent, recv, aux = {}, {}, {}
            for g in infos:
                if t >= g["D"]:
                    continue
                step, block = f ** t, f ** (t + 1)
                words = len(g["splitters"]) * w
                for rel in range(0, g["G"], block):
                    for i in range(1, f):
                        child = rel + i * step
                        if child < g["G"]:
                            src, dst = g["lo"] + rel, g["lo"] + child
                            sent[src] = sent.get(src, 0) + words
                            recv[dst] = recv.get(dst, 0) + words
                for m in g["local"]:
                    aux[m] = aux.get(m, 0) + words
            self.superstep(sent, recv, _plus(data_words, aux))

        # 3. bucket counts: up-sweep of subtree sums, down-sweep of offsets + totals
        for g in infos:
            nb = len(g["splitters"]) + 1
            g["nb"] = nb
            g["bucketed"] = {}
            g["count"] = {}
            for m, L in g["local"].items():
                bk = [bisect_right(g["splitters"], x) for x in L]
                g["bucketed"][m] = bk
                c = [0] * nb
                for j in bk:
                    c[j] += 1
                g["count"][m] = c
            g["acc"] = {m: list(c) for m, c in g["count"].items()}
            g["kids"] = {}
        for t in range(D):
            sent, recv, aux = {}, {}, {}
            for g in infos:
                if t >= g["D"]:
                    continue
                step, block = f ** t, f ** (t + 1)
                for rel in range(0, g["G"], step):
                    if rel % block == 0:
                        continue
                    src, dst = g["lo"] + rel, g["lo"] + rel - rel % block
                    vec = g["acc"][src]
                    sent[src] = sent.get(src, 0) + g["nb"]
                    recv[dst] = recv.get(dst, 0) + g["nb"]
                    g["kids"].setdefault((dst, t), []).append((rel, vec))
                for (m, _), lst in g["kids"].items():
                    aux[m] = aux.get(m, 0) + len(lst) * g["nb"]
            self.superstep(sent, recv, _plus(data_words, aux))
            for g in infos:
                if t >= g["D"]:
                    continue
                for (m, tt), lst in g["kids"].items():
                    if tt == t:
                        g["acc"][m] = [a + sum(v[j] for _, v in lst) for j, a in enumerate(g["acc"][m])]
        for g in infos:
            g["offset"] = {g["lo"]: [0] * g["nb"]}
            g["totals"] = g["acc"][g["lo"]]
        for t in reversed(range(D)):
            sent, recv, aux = {}, {}, {}
            for g in infos:
                if t >= g["D"]:
                    continue
                step, block = f ** t, f ** (t + 1)
                for rel in range(0, g["G"], block):
                    m = g["lo"] + rel
                    kids = sorted(g["kids"].get((m, t), []))
                    # own part of the level-t subtree precedes the children
                    own = list(g["acc"][m])
                    for _, v in kids:
                        own = [a - b for a, b in zip(own, v)]
                    run = [o + a for o, a in zip(g["offset"][m], own)]
                    for crel, v in kids:
                        dst = g["lo"] + crel
                        g["offset"][dst] = list(run)
                        run = [a + b for a, b in zip(run, v)]
                        sent[m] = sent.get(m, 0) + 2 * g["nb"]
                        recv[dst] = recv.get(dst, 0) + 2 * g["nb"]
                    g["acc"][m] = own
                for m in g["offset"]:
                    aux[m] = aux.get(m, 0) + 2 * g["nb"]
            self.superstep(sent, recv, _plus(data_words, aux))

        # 4. route every item to the machine owning its new rank
        new_groups = []
        moves = []
        for g in infos:
            starts, run = [], g["base"]
            for T in g["totals"]:
                starts.append(run)
                run += T
            for j, T in enumerate(g["totals"]):
                if T:
                    new_groups.append((starts[j], T))
            for m, L in g["local"].items():
                seen = [0] * g["nb"]
                for x, j in zip(L, g["bucketed"][m]):
                    rank = starts[j] + g["offset"][m][j] + seen[j]
                    seen[j] += 1
                    moves.append((m, rank, x))
        touched = {m for g in infos for m in g["local"]}
        incoming = {}
        sent, recv = {}, {}
        for src, rank, x in moves:
            dst = rank // load
            incoming.setdefault(dst, []).append((rank, x))
            sent[src] = sent.get(src, 0) + w
            recv[dst] = recv.get(dst, 0) + w
        for m in touched:
            lo_rank = m * load
            # items of finished groups on this machine stay in place
            keep = [(lo_rank + i, x) for i, x in enumerate(store[m])
                    if not any(g["base"] <= lo_rank + i < g["base"] + g["size"] for g in infos)]
            merged = sorted(keep + incoming.get(m, []))
            store[m] = [x for _, x in merged]
        resident = {m: len(b) * w for m, b in enumerate(store)}
        self.superstep(sent, recv, resident)
        return new_groups

    # aggregation -------------------------------------------------------------------

    def aggregate(self, groups: list, values: list, op: str) -> dict:
        """Per-group reduction via sort + segmented converge-cast."""
        if not groups:
            return {}
        items = []
        for seq, (g, v) in enumerate(zip(groups, values)):
            v = _lift(v, op)
            items.append((g, seq) + (v if isinstance(v, tuple) else (v,)))
        ordered = self.sort(items)
        w = len(items[0])
        load = self.place(len(ordered), w)
        store = [ordered[i:i + load] for i in range(0, len(ordered), load)]
        M = len(store)
        # local segment reduction: (first_key, first_val, last_key, last_val, single)
        summaries = []
        locals_ = []
        for b in store:
            segs = []
            for it in b:
                g, v = it[0], _value(it, op)
                if segs and segs[-1][0] == g:
                    segs[-1][1] = _combine(segs[-1][1], v, op)
                else:
                    segs.append([g, v])
            locals_.append(segs)
            summaries.append(_Summary(segs[0][0], segs[0][1], segs[-1][0], segs[-1][1], len(segs) == 1))
        vw = w - 1  # a value plus its group key
        msg_words = 2 * vw + 1
        f = _fan_in(self.s, msg_words)
        data_words = {m: len(b) * w for m, b in enumerate(store)}
        # f-ary recursive doubling: after the round with stride ``span`` each
        # machine holds the summary of the window of f * span machines ending at it
        pref = list(summaries)
        span = 1
        while span < M:
            sent, recv, nxt = {}, {}, []
            for m in range(M):
                acc = None
                for i in range(f - 1, 0, -1):
                    j = m - i * span
                    if j >= 0:
                        acc = pref[j] if acc is None else acc.join(pref[j], op)
                        sent[j] = sent.get(j, 0) + msg_words
                        recv[m] = recv.get(m, 0) + msg_words
                nxt.append(pref[m] if acc is None else acc.join(pref[m], op))
            self.superstep(sent, recv, _plus(data_words, {m: recv.get(m, 0) + msg_words for m in range(M)}))
            pref = nxt
            span *= f
        # shift: each machine receives the inclusive prefix of its left neighbour
        carry = {m: pref[m - 1] for m in range(1, M)}
        if M > 1:
            self.superstep({m: msg_words for m in range(M - 1)}, {m: msg_words for m in range(1, M)},
                           _plus(data_words, {m: msg_words for m in carry}))
        out = {}
        for m, segs in enumerate(locals_):
            c = carry.get(m)
            for i, (g, v) in enumerate(segs):
                if i == 0 and c is not None and c.last_key == g:
                    v = _combine(c.last_val, v, op)
                is_last_machine_of_group = (i < len(segs) - 1) or m == M - 1 or store[m + 1][0][0] != g
                if is_last_machine_of_group:
                    out[g] = _lower(v, op)
        return out

    # all-reduce ----------------------------------------------------------------------

    def allreduce(self, per_machine: list, op: str = "sum") -> list:
        """Element-wise reduction of equal-length vectors held one per machine."""
        M = len(per_machine)
        length = len(per_machine[0])
        chunk = max(1, self.s // 8)
        f = _fan_in(self.s, min(chunk, length))
        D = _depth(M, f)
        out = []
        for c0 in range(0, length, chunk):
            vecs = [list(v[c0:c0 + chunk]) for v in per_machine]
            cw = len(vecs[0])
            for t in range(D):
                step, block = f ** t, f ** (t + 1)
                sent, recv = {}, {}
                for rel in range(0, M, step):
                    if rel % block:
                        dst = rel - rel % block
                        vecs[dst] = [_combine(a, b, op) for a, b in zip(vecs[dst], vecs[rel])]
                        sent[rel] = cw
                        recv[dst] = recv.get(dst, 0) + cw
                self.superstep(sent, recv, {m: 2 * cw for m in range(M)})
            for t in reversed(range(D)):
                step, block = f ** t, f ** (t + 1)
                sent, recv = {}, {}
                for rel in range(0, M, block):
                    for i in range(1, f):
                        if rel + i * step < M:
                            sent[rel] = sent.get(rel, 0) + cw
                            recv[rel + i * step] = cw
                self.superstep(sent, recv, {m: cw for m in range(M)})
            out.extend(vecs[0])
        return out


@dataclass
class _Summary:
    first_key: object
    first_val: object
    last_key: object
    last_val: object
    single: bool

    def join(self, right: "_Summary", op: str) -> "_Summary":
        first_val = self.first_val
        if self.single and right.first_key == self.first_key:
            first_val = _combine(first_val, right.first_val, op)
        if self.last_key == right.first_key:
            if right.single:
                return _Summary(self.first_key, first_val, self.last_key,
                                _combine(self.last_val, right.last_val, op), self.single)
            return _Summary(self.first_key, first_val, right.last_key, right.last_val, False)
        return _Summary(self.first_key, first_val, right.last_key, right.last_val, False)


def _lift(v, op):
    if op == "sum":
        return Fraction(v)
    if op == "count":
        return 1
    return v


def _value(item, op):
    rest = item[2:]
    return rest if op == "min" and len(rest) > 1 else rest[0]


def _combine(a, b, op):
    if op in ("sum", "count"):
        return a + b
    if op == "min":
        return min(a, b)
    if op == "or":
        return a | b
    raise ValueError(f"unknown reduce op {op!r}")


def _lower(v, op):
    return float(v) if op == "sum" else v


def _plus(a: dict, b: dict) -> dict:
    out = dict(a)
    for m, v in b.items():
        out[m] = out.get(m, 0) + v
    return out


def _regular_samples(L: list, f: int) -> list:
    if not L:
        return []
    pos = sorted({(j * len(L)) // f for j in range(f)})
    pos.append(len(L))
    return [(L[a], pos[i + 1] - a) for i, a in enumerate(pos[:-1])]


def _compress(samples: list, f: int) -> list:
    samples = sorted(samples)
    W = sum(wt for _, wt in samples)
    out, acc, j = [], 0, 0
    for key, wt in samples:
        if len(out) < f and acc >= j * W / f:
            out.append([key, 0])
            j += 1
        out[-1][1] += wt
        acc += wt
    return [(k, wt) for k, wt in out]


def _splitters(summary: list, b: int) -> list:
    W = sum(wt for _, wt in summary)
    cuts, acc, j = [], 0, 1
    for key, wt in summary:
        if j < b and acc >= j * W / b and acc > 0:
            cuts.append(key)
            while j < b and acc >= j * W / b:
                j += 1
        acc += wt
    return cuts


# -- runtime adapter -----------------------------------------------------------------------


class MpcRuntime(LocalRuntime):
    """Routes the pipeline's cross-point steps through a :class:`Simulator`."""

    def __init__(self, sim: Simulator, n: int, points_per_machine: int):
        super().__init__(s=sim.s)
        self.sim = sim
        self.n = n
        self.ppm = points_per_machine

    def _record(self, c: Charge):
        super()._record(c)
        self.sim.add_charge(c)

    def _by_machine(self, values) -> list:
        return [values[i:i + self.ppm] for i in range(0, len(values), self.ppm)]

    def fsums(self, columns) -> list[float]:
        cols = [list(c) for c in columns]
        per_point = list(zip(*cols))
        parts = [[sum((Fraction(v[j]) for v in block), Fraction(0)) for j in range(len(cols))]
                 for block in self._by_machine(per_point)]
        return [float(v) for v in self.sim.allreduce(parts, "sum")]

    def fsum(self, values) -> float:
        values = list(values)
        if not values:
            return 0.0
        return self.fsums([values])[0]

    def sort_order(self, keys: list[tuple]) -> list[int]:
        items = [tuple(k) + (i,) for i, k in enumerate(keys)]
        return [it[-1] for it in self.sim.sort(items)]

    def group_reduce(self, groups, values, op: str) -> dict:
        return self.sim.aggregate(list(groups), list(values), op)


def record_words(dim: int) -> int:
    """Words per resident point: coordinates, id, opening value, cost estimate, weight."""
    return dim + 4


def distributed_solve_kz(P, k: int, z: int, gamma: float, config: MpcConfig, seed: int = 0):
    """Run the pipeline with data movement on the simulator; returns (centers, RunStats, result)."""
    from .rounding import solve_kz

    oracle = P if isinstance(P, DistanceOracle) else EuclideanOracle(P if isinstance(P, Dataset) else Dataset(P))
    n = oracle.n
    dim = oracle.dataset.dim if isinstance(oracle, EuclideanOracle) else 1
    rw = record_words(dim)
    config.check_input(n, n * rw)
    if not is_normalized(oracle):
        raise PreconditionError("distributed_solve_kz expects a normalized dataset")
    ppm = max(1, (config.s // 4) // rw)
    per_machine = [min(ppm, n - i) * rw for i in range(0, n, ppm)]
    sim = Simulator(config, per_machine)
    runtime = MpcRuntime(sim, n, ppm)
    backend = PrimitiveBackend(mode="cost_modeled", runtime=runtime)
    result = solve_kz(oracle, k, z, gamma, backend, seed=seed)
    return result.centers, sim.stats, result


def mpc_sort(items: list, config: MpcConfig) -> tuple[list, RunStats]:
    sim = Simulator(config)
    return sim.sort([tuple(x) for x in items]), sim.stats


def mpc_aggregate(groups: list, values: list, op: str, config: MpcConfig) -> tuple[dict, RunStats]:
    sim = Simulator(config)
    return sim.aggregate(groups, values, op), sim.stats
