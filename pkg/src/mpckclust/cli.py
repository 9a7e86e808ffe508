"""Command line entry point: ``mpc-kclust {gen,solve,value,verify,bench}``.

Exit codes: 0 ok, 1 verification failure, 2 usage or input error,
3 capacity or configuration error of the simulator.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from .datagen import KINDS, generate
from .errors import CapacityError, ConfigurationError, DegenerateDatasetError, KClustError
from .facility import DerivedConstants
from .fractional import estimate_opt_value
from .io import load_dataset, load_matrix, save_dataset
from .metric import EuclideanOracle, normalize_dataset, normalize_oracle
from .mpc import MpcConfig, distributed_solve_kz
from .primitives import PrimitiveBackend
from .report import RunReport, digest
from .rounding import solve_kz
from .runtime import LocalRuntime
from .verify import SUITES, instance_hash, run_battery

ORACLE_LIMIT = 12


class UsageError(KClustError):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpc-kclust", description="Distributed (k, z)-clustering toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic dataset")
    g.add_argument("kind", choices=KINDS)
    g.add_argument("n", type=int)
    g.add_argument("path")
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--clusters", type=int, default=4)

    def common(p):
        p.add_argument("data", help="CSV or JSON points (or a distance matrix with --matrix)")
        p.add_argument("--matrix", action="store_true", help="treat DATA as a square distance-matrix CSV")
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--z", type=int, default=1)
        p.add_argument("--gamma", type=float, default=8.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", choices=("json", "csv"), default="json")

    s = sub.add_parser("solve", help="compute at most k centers")
    common(s)
    s.add_argument("--backend", choices=("exact", "cost-modeled"), default="exact")
    s.add_argument("--mpc-s", type=int, default=None, help="run on the simulator with this local memory")
    s.add_argument("--oracle", action="store_true", help=f"add the enumeration ratio (n <= {ORACLE_LIMIT})")

    v = sub.add_parser("value", help="estimate the optimal cost")
    common(v)
    v.add_argument("--alpha-scale", type=float, default=None)
    v.add_argument("--backend", choices=("exact", "cost-modeled"), default="exact")

    f = sub.add_parser("verify", help="run the property battery")
    f.add_argument("--instances", type=int, default=20)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--suite", action="append", choices=sorted(SUITES))
    f.add_argument("--out", choices=("json", "csv"), default="json")

    b = sub.add_parser("bench", help="rounds and memory over an (n, s) grid")
    b.add_argument("--n", type=int, nargs="+", default=[2 ** i for i in range(10, 15)])
    b.add_argument("--s", type=int, nargs="+", default=[64, 256])
    b.add_argument("--k", type=int, default=4)
    b.add_argument("--z", type=int, default=1)
    b.add_argument("--gamma", type=float, default=8.0)
    b.add_argument("--kind", choices=KINDS, default="gaussian-mixture")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", choices=("json", "csv"), default="json")
    return ap


def _load(args):
    """Returns (oracle on the original scale, normalized oracle or None, scale)."""
    if args.matrix:
        raw = load_matrix(args.data)
    else:
        raw = EuclideanOracle(load_dataset(args.data))
    if not 1 <= args.k <= raw.n:
        raise UsageError(f"k must lie in [1, n] = [1, {raw.n}], got {args.k}")
    try:
        if args.matrix:
            norm, scale, _ = normalize_oracle(raw)
        else:
            P, scale, _ = normalize_dataset(raw.dataset)
            norm = EuclideanOracle(P)
    except DegenerateDatasetError as exc:
        if raw.n == 1 or raw.matrix().max() == 0:
            return raw, None, 1.0
        raise UsageError(str(exc)) from exc
    return raw, norm, scale


def _instance(raw, args) -> dict:
    pts = raw.matrix() if args.matrix else raw.dataset.points
    return {"source": args.data, "n": raw.n, "d": None if args.matrix else raw.dataset.dim,
            "hash": instance_hash(pts)}


def _params(args, **extra) -> dict:
    z = args.z
    out = {"k": args.k, "z": z, "gamma": args.gamma, "beta": DerivedConstants(z, args.gamma).beta_robust,
           "alpha_r": 1.0, "seed": args.seed, "backend": getattr(args, "backend", "exact")}
    out.update(extra)
    return out


def _backend(args) -> PrimitiveBackend:
    if args.backend == "cost-modeled":
        return PrimitiveBackend(mode="cost_modeled", runtime=LocalRuntime())
    return PrimitiveBackend()


def cmd_gen(args) -> RunReport:
    P = generate(args.kind, args.n, args.d, args.seed, clusters=args.clusters)
    save_dataset(P, args.path)
    return RunReport("gen", {"source": args.path, "n": P.n, "d": P.dim, "hash": instance_hash(P.points)},
                     {"kind": args.kind, "seed": args.seed})


def cmd_solve(args) -> RunReport:
    raw, norm, scale = _load(args)
    rep = RunReport("solve", _instance(raw, args), _params(args, s=args.mpc_s))
    if norm is None:
        rep.outputs = {"centers": [0]}
        rep.costs = {"cost": 0.0}
        return rep
    if args.mpc_s is not None:
        C, stats, res = distributed_solve_kz(norm, args.k, args.z, args.gamma,
                                             MpcConfig.auto(args.mpc_s, norm.n, args.seed), seed=args.seed)
        rep.stats = stats.to_dict()
    else:
        res = solve_kz(norm, args.k, args.z, args.gamma, _backend(args), seed=args.seed)
        if res.charges:
            rep.stats = {"charges": [c.to_dict() for c in res.charges]}
    cost = res.cost / scale ** args.z
    rep.outputs = {"centers": [int(c) for c in res.centers], "y_digest": digest(res.y)}
    rep.costs = {"cost": cost}
    if args.oracle:
        if raw.n > ORACLE_LIMIT:
            raise UsageError(f"--oracle needs n <= {ORACLE_LIMIT}")
        from .oracles import brute_opt_integral
        opt = brute_opt_integral(raw, args.k, args.z).value
        rep.costs["opt"] = opt
        rep.ratios["cost_over_opt"] = cost / opt if opt > 0 else (1.0 if cost == 0 else math.inf)
    return rep


def cmd_value(args) -> RunReport:
    raw, norm, scale = _load(args)
    rep = RunReport("value", _instance(raw, args), _params(args, alpha_scale=args.alpha_scale))
    if norm is None:
        rep.outputs = {"eta": 0.0}
        return rep
    est = estimate_opt_value(norm, args.k, args.z, args.gamma, _backend(args), args.alpha_scale, args.seed)
    rep.params["alpha_scale"] = est.alpha_scale
    rep.outputs = {"eta": est.eta / scale ** args.z}
    return rep


def cmd_verify(args) -> RunReport:
    report = run_battery(args.instances, args.seed, args.suite)
    rows = report.rows()
    return RunReport("verify", params={"instances": args.instances, "seed": args.seed,
                                       "suites": args.suite or sorted(SUITES)},
                     outputs={"passed": report.passed, "failures": report.failures()}, rows=rows)


def cmd_bench(args) -> RunReport:
    rows = []
    for n in args.n:
        P, _, _ = normalize_dataset(generate(args.kind, n, 2, args.seed))
        oracle = EuclideanOracle(P)
        for s in sorted(args.s):
            t0 = time.perf_counter()
            _, stats, _ = distributed_solve_kz(oracle, args.k, args.z, args.gamma,
                                               MpcConfig.auto(s, n, args.seed), seed=args.seed)
            logs = math.ceil(math.log(n) / math.log(s) - 1e-12)
            rows.append({"n": n, "s": s, "rounds": stats.rounds, "supersteps": stats.supersteps,
                         "peak_local": stats.peak_local, "total_memory": stats.total_memory,
                         "log_s_n": logs, "rounds_per_log": stats.rounds / max(logs, 1),
                         "seconds": round(time.perf_counter() - t0, 3)})
    by_n: dict = {}
    for r in rows:
        by_n.setdefault(r["n"], []).append(r["rounds"])
    monotone = all(all(a >= b for a, b in zip(v, v[1:])) for v in by_n.values())
    return RunReport("bench", params={"k": args.k, "z": args.z, "gamma": args.gamma, "kind": args.kind,
                                      "seed": args.seed},
                     outputs={"monotone_in_s": monotone}, rows=rows)


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "value": cmd_value, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        rep = COMMANDS[args.command](args)
    except (CapacityError, ConfigurationError) as exc:
        print(f"mpc-kclust: {exc}", file=sys.stderr)
        return 3
    except (KClustError, OSError, ValueError) as exc:
        print(f"mpc-kclust: {exc}", file=sys.stderr)
        return 2
    rep.wall_time = round(time.perf_counter() - t0, 6)
    if args.command != "gen":
        fmt = getattr(args, "out", "json")
        sys.stdout.write(rep.to_csv() if fmt == "csv" else rep.to_json() + "\n")
    if args.command == "verify" and not rep.outputs["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
