"""bisq command line: generate graphs, run estimators, sweep, distinguish.

Exit codes: 0 success, 2 usage or spec error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .estimators import EstimatorConfig, triangle_est, triangle_est_high, triangle_est_low
from .graph import Graph, GraphError, GraphSpec, count_triangles_exact, read_edge_list, write_edge_list
from .hard import (
    HardInstanceError,
    HardInstanceSpec,
    PaddedSpec,
    gen_hard,
    gen_padded,
    run_distinguisher,
    validate_instance,
)
from .oracle import OracleHandle

BENCH_COLUMNS = ("instance", "algorithm", "seed", "n", "m", "T", "t_hat", "rel_error",
                 "bis", "ee", "wall_s", "error")


class UsageError(Exception):
    pass


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BISQ_THREADS", "1")))
    except ValueError:
        raise UsageError("BISQ_THREADS must be an integer")


def _config(args) -> EstimatorConfig:
    try:
        return EstimatorConfig(epsilon=args.epsilon, delta=args.delta, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


_REQUIRED = {"er": ("n", "p"), "complete": ("n",), "clique-biclique": ("k",), "hard": ("m", "t")}


def _require(args, kind: str) -> None:
    missing = [f"--{x}" for x in _REQUIRED[kind] if getattr(args, x) is None]
    if missing:
        raise UsageError(f"{kind} needs {' '.join(missing)}")


def _graph_spec(args) -> GraphSpec:
    _require(args, args.gen)
    if args.gen == "er":
        return GraphSpec("er", {"n": args.n, "p": args.p})
    if args.gen == "complete":
        return GraphSpec("complete", {"n": args.n})
    if args.gen == "clique-biclique":
        return GraphSpec("clique-biclique", {"k": args.k, "a": args.a, "b": args.b})
    raise UsageError(f"unknown generator {args.gen!r}")


def _load_graph(args) -> Graph:
    if (args.input is None) == (args.gen is None):
        raise UsageError("give exactly one graph source: --input or --gen")
    if args.input is not None:
        try:
            return read_edge_list(args.input)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read {args.input}: {exc}")
    if args.gen == "hard":
        _require(args, "hard")
        return gen_hard(HardInstanceSpec(args.m, args.t, args.flavor, args.graph_seed))[0]
    return _graph_spec(args).build(args.graph_seed)


# -- subcommands -----------------------------------------------------------------

def cmd_generate(args) -> int:
    sidecar: dict = {"kind": args.kind, "seed": args.seed}
    args.gen = args.kind
    if args.kind == "hard":
        _require(args, "hard")
        spec = HardInstanceSpec(args.m, args.t, args.flavor, args.seed)
        if args.pad:
            g, labels = gen_padded(PaddedSpec(spec))
        else:
            g, labels = gen_hard(spec)
        sidecar["params"] = {"m": args.m, "t": args.t, "flavor": spec.flavor, "pad": args.pad}
        tri = count_triangles_exact(g)
        if not args.pad:
            rep = validate_instance(g, labels, spec, triangles=tri)
            sidecar["validation"] = {"passed": rep.passed, "checks": rep.checks, "notes": rep.notes,
                                     "sizes": rep.sizes}
    else:
        gs = _graph_spec(args)
        g = gs.build(args.seed)
        sidecar["params"] = gs.params
        tri = count_triangles_exact(g)
    sidecar.update({"n": g.n, "m": g.m, "triangles": tri})
    write_edge_list(g, args.out)
    Path(str(args.out) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out} (n={g.n}, m={g.m}, T={tri})", file=sys.stderr)
    return 0


def cmd_estimate(args) -> int:
    g = _load_graph(args)
    h = OracleHandle(g, route=args.route)
    rep = triangle_est(h, _config(args))
    _emit(rep.to_json() + "\n", args.out)
    return 0


def _bench_row(inst: dict, algorithm: str, seed: int, base: EstimatorConfig) -> dict:
    row = {"instance": inst.get("name", inst["kind"]), "algorithm": algorithm, "seed": seed}
    try:
        g = GraphSpec(inst["kind"], inst.get("params", {})).build(inst.get("seed", 0))
        t_true = count_triangles_exact(g)
        h = OracleHandle(g)
        cfg = replace(base, seed=seed)
        t0 = time.perf_counter()
        if algorithm == "triangle-est":
            t_hat = triangle_est(h, cfg).t_hat
        elif algorithm == "high":
            t_hat = triangle_est_high(h, cfg, max(t_true, 1), g.m)
        elif algorithm == "low":
            t_hat = triangle_est_low(h, cfg, max(t_true, 1), g.m)
        else:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        wall = time.perf_counter() - t0
        snap = h.ledger.snapshot()
        rel = abs(t_hat - t_true) / t_true if t_true else (0.0 if t_hat == 0 else math.inf)
        row.update(n=g.n, m=g.m, T=t_true, t_hat=t_hat, rel_error=rel, bis=snap["bis"], ee=snap["ee"],
                   wall_s=round(wall, 4), error="")
    except Exception as exc:  # recorded per row; the sweep goes on
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_bench(args) -> int:
    try:
        sweep = json.loads(Path(args.sweep).read_text())
        graphs = sweep["graphs"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot parse sweep {args.sweep}: {exc}")
    seeds = sweep.get("seeds", list(range(args.trials)))
    algorithms = sweep.get("algorithms", ["triangle-est"])
    base = EstimatorConfig(epsilon=sweep.get("epsilon", args.epsilon), delta=sweep.get("delta", args.delta),
                           seed=args.seed)
    jobs = [(inst, alg, args.seed + s) for inst in graphs for alg in algorithms for s in seeds]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda j: _bench_row(*j, base), jobs))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n", restval="")
    w.writeheader()
    w.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_distinguish(args) -> int:
    spec = HardInstanceSpec(args.m, args.t, "yes", args.seed)
    rep = run_distinguisher(spec, args.estimator, _config(args), args.trials)
    _emit(rep.to_csv(), args.out)
    print(f"accuracy yes={rep.accuracy('yes'):.3f} no={rep.accuracy('no'):.3f} "
          f"all={rep.accuracy():.3f}; ee queries p10/p50/p90={rep.query_quantiles()}", file=sys.stderr)
    return 0


# -- parser ------------------------------------------------------------------------

def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--delta", type=float, default=None, help="failure probability (default 1/n)")
    p.add_argument("--seed", type=int, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bisq", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write an edge list plus a ground-truth JSON sidecar")
    g.add_argument("kind", choices=["er", "complete", "clique-biclique", "hard"])
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--k", type=int)
    g.add_argument("--a", type=int, default=0)
    g.add_argument("--b", type=int, default=0)
    g.add_argument("--m", type=int)
    g.add_argument("--t", type=int)
    g.add_argument("--flavor", choices=["yes", "no"], default="yes")
    g.add_argument("--pad", action="store_true", help="append the triangle-free K_{s,s} pad")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="run the triangle estimator on one graph")
    e.add_argument("--input")
    e.add_argument("--gen", choices=["er", "complete", "clique-biclique", "hard"])
    for flag, typ in (("--n", int), ("--p", float), ("--k", int), ("--m", int), ("--t", int)):
        e.add_argument(flag, type=typ)
    e.add_argument("--a", type=int, default=0)
    e.add_argument("--b", type=int, default=0)
    e.add_argument("--flavor", choices=["yes", "no"], default="yes")
    e.add_argument("--graph-seed", type=int, default=0)
    e.add_argument("--route", choices=["bis", "ee"], default="bis")
    _add_estimator_flags(e)
    e.add_argument("-o", "--out")
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bench", help="run a JSON sweep and write one CSV row per run")
    b.add_argument("sweep")
    b.add_argument("--trials", type=int, default=3, help="seeds per graph when the sweep lists none")
    _add_estimator_flags(b)
    b.add_argument("-o", "--out")
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("distinguish", help="classify planted Yes/No instances through EE queries")
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--t", type=int, required=True)
    d.add_argument("--trials", type=int, default=50)
    d.add_argument("--estimator", choices=["triangle-est", "exact"], default="triangle-est")
    _add_estimator_flags(d)
    d.add_argument("-o", "--out")
    d.set_defaults(func=cmd_distinguish)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, HardInstanceError, GraphError) as exc:
        print(f"bisq: error: {exc}", file=sys.stderr)
        return 2
    except (AssertionError, ValueError) as exc:
        print(f"bisq: internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
