"""Command-line front end.

Exit codes: 0 success, 1 verification mismatch, 2 usage or input error,
3 capacity exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import platform
import sys
import time
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import CapacityError, DegenerateSpectrumError, ParseError, ValidationError, XylabError

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3
POLY_LIMIT = 12
EXP_LIMIT = 7
EXP_LIMIT_EXTENDED = 9
QAOA_LIMIT = 16

log = logging.getLogger("xylab")


class UsageError(XylabError):
    pass


def parse_range(text: str) -> list[int]:
    """``"3..7"``, ``"5"`` or ``"3,5,8"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise UsageError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse integer range {text!r}") from None


def parse_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


# flags that only choose where results go; left out so reruns compare equal
OUTPUT_FLAGS = frozenset({"out", "out_json", "out_csv", "records_out", "instance_out", "verbose"})


def config_block(command: str, args: argparse.Namespace) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items())
             if k != "func" and k not in OUTPUT_FLAGS and not callable(v)}
    return {
        "command": command,
        "flags": flags,
        "versions": {"xylab": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }


def _open_out(path: str | None):
    if path in (None, "-"):
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8"), True


def _write_csv(path: str | None, header: Sequence[str], rows: Sequence[dict]) -> None:
    fh, close = _open_out(path)
    try:
        w = csv.DictWriter(fh, fieldnames=list(header), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)
    finally:
        if close:
            fh.close()


def _write_meta(path: str | None, meta: dict) -> None:
    """Config sidecar next to a CSV output so the run can be repeated."""
    if path in (None, "-"):
        return
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _write_json(path: str | None, data: dict) -> None:
    fh, close = _open_out(path)
    try:
        fh.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# dla-dim

def cmd_dla_dim(args: argparse.Namespace) -> int:
    from .dla import POLY_TOPOLOGIES, build_dla, canonical_topology, expected_dim, make_generators

    topology = canonical_topology(args.topology)
    ns = parse_range(args.n)
    limit = POLY_LIMIT if topology in POLY_TOPOLOGIES else (
        EXP_LIMIT_EXTENDED if args.extended else EXP_LIMIT)
    too_big = [n for n in ns if n > limit]
    if too_big:
        hint = "" if topology in POLY_TOPOLOGIES or args.extended else " (use --extended for up to 9)"
        raise CapacityError(f"{topology} is limited to n <= {limit}{hint}; requested {too_big}")
    gens = [make_generators(topology, n) for n in ns]  # validates every n before any work
    rows, ok = [], True
    for n, g in zip(ns, gens):
        start = time.perf_counter()
        basis = build_dla(g)
        want = expected_dim(topology, n)
        match = basis.dim == want
        ok &= match
        rows.append({"topology": topology, "n": n, "dim_built": basis.dim,
                     "dim_expected": want, "match": match})
        log.info("%s n=%d dim=%d expected=%d (%.2fs)", topology, n, basis.dim, want,
                 time.perf_counter() - start)
    _write_csv(args.out, ["topology", "n", "dim_built", "dim_expected", "match"], rows)
    _write_meta(args.out, config_block("dla-dim", args))
    return EXIT_OK if ok else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# verify-algebra

def cmd_verify_algebra(args: argparse.Namespace) -> int:
    from .basis import verify_suite

    ns = parse_range(args.n)
    bad = [n for n in ns if not 3 <= n <= 8]
    if bad:
        raise UsageError(f"verify-algebra covers 3 <= n <= 8; got {bad}")
    reports = [verify_suite(n) for n in ns]
    passed = all(r["passed"] for r in reports)
    _write_json(args.out, {"config": config_block("verify-algebra", args), "passed": passed,
                           "reports": reports})
    return EXIT_OK if passed else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# ingest-prices

def cmd_ingest_prices(args: argparse.Namespace) -> int:
    from .problems import ingest_prices, save_instance

    data = ingest_prices(args.csv)  # skipped days and months are logged as warnings
    _write_json(args.out, {"config": config_block("ingest-prices", args), "market": data.to_dict()})
    if args.instance_out:
        if args.month is None or args.assets is None:
            raise UsageError("--instance-out needs --month and --assets")
        inst = data.instance(args.month, args.assets, args.k, args.q)
        save_instance(inst, args.instance_out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen-graph

def cmd_gen_graph(args: argparse.Namespace) -> int:
    from .problems import build_problem, canonical_graph_kind, random_graph, save_instance, write_graph

    kind = canonical_graph_kind(args.kind)
    edges = random_graph(kind, args.n, args.seed)
    comment = f"{kind} n={args.n} seed={args.seed} xylab {__version__}"
    if args.out in (None, "-"):
        print(f"# {comment}")
        print(f"# n = {args.n}")
        for u, v in edges:
            print(u, v)
    else:
        write_graph(edges, args.out, comment + f"\n# n = {args.n}")
    if args.instance_out:
        if args.problem is None:
            raise UsageError("--instance-out needs --problem")
        inst = build_problem(args.problem, args.n, edges=edges, k=args.k)
        save_instance(inst, args.instance_out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# run-qaoa / sweep-depth

def _jobs(args: argparse.Namespace) -> int:
    from .qaoa import default_jobs

    return default_jobs() if os.environ.get("XYLAB_JOBS") else max(1, args.jobs)


def _single_instance(args: argparse.Namespace):
    from .problems import build_problem, load_instance, read_graph

    if args.instance:
        return load_instance(args.instance)
    if args.problem is None:
        raise UsageError("give --instance or --problem")
    if args.graph_file:
        n, edges = read_graph(args.graph_file)
        if args.n is not None and args.n != n:
            raise UsageError(f"--n {args.n} disagrees with the graph file ({n} vertices)")
        return build_problem(args.problem, n, edges=edges, k=args.k)
    if args.n is None:
        raise UsageError("--n is required with --problem")
    return build_problem(args.problem, args.n, graph=args.graph, seed=args.instance_seed, k=args.k)


def _check_size(n: int) -> None:
    if n > QAOA_LIMIT:
        raise CapacityError(f"statevector experiments limited to n <= {QAOA_LIMIT}, got {n}")


def _arms(text: str) -> list[str]:
    from .qaoa import ARMS

    arms = parse_list(text)
    unknown = [a for a in arms if a not in ARMS]
    if unknown or not arms:
        raise UsageError(f"unknown arms {unknown}; choose from {', '.join(ARMS)}")
    return arms


def step_rows(records) -> list[dict]:
    rows = []
    for rec in records:
        for r_idx, r in enumerate(rec.restarts):
            for pt in r.points:
                rows.append({"instance": rec.instance.label, "p": rec.config.p, "arm": rec.arm,
                             "restart": r_idx, "seed": r.seed, "phase": pt.phase, "step": pt.step,
                             "loss": pt.loss, "ar": pt.ar, "succ": pt.succ})
    return rows


STEP_HEADER = ["instance", "p", "arm", "restart", "seed", "phase", "step", "loss", "ar", "succ"]


def cmd_run_qaoa(args: argparse.Namespace) -> int:
    from .experiments import arm_tasks, run_tasks

    inst = _single_instance(args)
    _check_size(inst.n)
    arms = _arms(args.arms)
    tasks = arm_tasks([inst], arms, args.p, restarts=args.restarts, steps=args.steps, lr=args.lr,
                      seed=args.seed, random_steps=args.random_steps)
    records = run_tasks(tasks, _jobs(args))
    out = {
        "config": config_block("run-qaoa", args),
        "timestamp": None if args.no_timestamp else time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "records": [r.to_dict() for r in records],
    }
    _write_json(args.out_json, out)
    if args.out_csv:
        _write_csv(args.out_csv, STEP_HEADER, step_rows(records))
    for rec in records:
        s = rec.summary()
        print(f"{rec.arm}: best_ar={s['best_ar']:.6f} best_succ={s['best_succ']:.6f}", file=sys.stderr)
    return EXIT_OK


SWEEP_HEADER = ["problem", "graph", "n", "p", "arm", "instances", "ar_median", "ar_q1", "ar_q3",
                "succ_median", "succ_q1", "succ_q3"]


def cmd_sweep_depth(args: argparse.Namespace) -> int:
    from .experiments import arm_tasks, depth_trend_warnings, instance_set, run_tasks, summarize
    from .problems import load_instance

    if args.instance_files:
        instances = [load_instance(p) for p in parse_list(args.instance_files)]
        problem, graph = "file", "file"
    else:
        if args.problem is None or args.n is None:
            raise UsageError("give --instance-files or --problem with --n")
        instances = instance_set(args.problem, args.n, args.instances, args.graph, args.instance_seed)
        problem, graph = args.problem, args.graph
    for inst in instances:
        _check_size(inst.n)
    arms = _arms(args.arms)
    ps = parse_range(args.p_list)
    if not ps or min(ps) < 1:
        raise UsageError("depths must be positive")
    tasks = []
    for p in ps:
        tasks += arm_tasks(instances, arms, p, restarts=args.restarts, steps=args.steps, lr=args.lr,
                           seed=args.seed, random_steps=args.random_steps)
    records = run_tasks(tasks, _jobs(args))
    rows = []
    summaries = summarize(records)
    for s in summaries:
        row = {"problem": problem, "graph": graph, "n": instances[0].n}
        row.update(s.row())
        rows.append(row)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        depth_trend_warnings(summaries)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write_csv(args.out, SWEEP_HEADER, rows)
    _write_meta(args.out, config_block("sweep-depth", args))
    if args.records_out:
        _write_json(args.records_out, {"config": config_block("sweep-depth", args),
                                       "records": [r.to_dict() for r in records]})
    return EXIT_OK


# ---------------------------------------------------------------------------

def _add_training_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--p", type=int, default=4, help="circuit depth")
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--steps", type=int, default=100, help="Adam steps per phase")
    sp.add_argument("--random-steps", type=int, default=None,
                    help="full-circuit steps for random arms (default: --steps)")
    sp.add_argument("--lr", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0, help="master seed for parameter draws")
    sp.add_argument("--arms", default="ws,rand", help="comma list from ws, rand, sa-ws, sa-rand")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (XYLAB_JOBS overrides)")
    sp.add_argument("--problem", choices=["portfolio", "partition", "sparsest"])
    sp.add_argument("--graph", default="Reg3", help="Reg3 or Rnd2n")
    sp.add_argument("--n", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--instance-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xylab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"xylab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("dla-dim", help="build DLAs and compare with the closed-form dimension")
    sp.add_argument("--topology", required=True, help="e.g. xy-path, xy-cycle-z, xy-clique")
    sp.add_argument("--n", required=True, help="qubit range such as 3..7")
    sp.add_argument("--extended", action="store_true", help="allow n up to 9 for exponential topologies")
    sp.add_argument("--out", help="CSV path (stdout if omitted)")
    sp.set_defaults(func=cmd_dla_dim)

    sp = sub.add_parser("verify-algebra", help="commutation relations and nesting identities")
    sp.add_argument("--n", default="3..6")
    sp.add_argument("--out", help="JSON report path (stdout if omitted)")
    sp.set_defaults(func=cmd_verify_algebra)

    sp = sub.add_parser("ingest-prices", help="monthly returns and covariances from daily closes")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--out")
    sp.add_argument("--month", help="YYYY-MM for --instance-out")
    sp.add_argument("--assets", type=int, help="number of top tickers in the instance")
    sp.add_argument("--k", type=int)
    sp.add_argument("--q", type=float, default=1.0, help="risk aversion")
    sp.add_argument("--instance-out")
    sp.set_defaults(func=cmd_ingest_prices)

    sp = sub.add_parser("gen-graph", help="seeded random graph as an edge list")
    sp.add_argument("--kind", required=True, help="Reg3 or Rnd2n")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--problem", choices=["partition", "sparsest"])
    sp.add_argument("--k", type=int)
    sp.add_argument("--instance-out")
    sp.set_defaults(func=cmd_gen_graph)

    sp = sub.add_parser("run-qaoa", help="warm-start and random-start QAOA on one instance")
    _add_training_flags(sp)
    sp.add_argument("--instance", help="instance JSON")
    sp.add_argument("--graph-file", help="edge list used with --problem")
    sp.add_argument("--out-json")
    sp.add_argument("--out-csv")
    sp.add_argument("--no-timestamp", action="store_true")
    sp.set_defaults(func=cmd_run_qaoa)

    sp = sub.add_parser("sweep-depth", help="median/quartile table over instances and depths")
    _add_training_flags(sp)
    sp.add_argument("--instances", type=int, default=10)
    sp.add_argument("--instance-files", help="comma list of instance JSON files")
    sp.add_argument("--p-list", default="1,2,4")
    sp.add_argument("--out")
    sp.add_argument("--records-out")
    sp.set_defaults(func=cmd_sweep_depth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (UsageError, ValidationError, ParseError, DegenerateSpectrumError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
