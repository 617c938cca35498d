"""Command-line entry point: simulate, discover, evaluate, graph."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import evaluation, io, sem
from .icp import discover_v1, discover_v2


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _resolve_spec(name_or_path: str) -> sem.SemSpec:
    builtin = {s.name: s for s in sem.builtin_specs()}
    if name_or_path in builtin:
        return builtin[name_or_path]
    if Path(name_or_path).exists():
        return io.read_spec(name_or_path)
    raise SystemExit(
        f"error: unknown spec {name_or_path!r}; builtin specs are: "
        + ", ".join(sorted(builtin))
    )


def _add_discovery_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=("v1", "v2"), default="v1")
    parser.add_argument("--k-envs", type=int, default=3, help="environments per covariate")
    parser.add_argument("--alpha", type=float, default=0.05, help="subset rejection level")
    parser.add_argument("--alpha-vote", type=float, default=0.1, help="voting level (v2)")
    parser.add_argument("--cap", type=int, default=5, help="covariate pool size (v2)")
    parser.add_argument("--min-leaf", type=int, default=None, help="tree leaf-size floor")
    parser.add_argument(
        "--env-fit-frac",
        type=float,
        default=0.3,
        help="fraction of rows used to fit environment trees (0 disables the split)",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker threads (default: available parallelism); results do not depend on it",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treeicp",
        description="Causal discovery from observational data via tree-generated "
        "environments and invariant prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a dataset from a model spec")
    p.add_argument("--spec", required=True, help="builtin name or spec JSON path")
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output CSV path")

    p = sub.add_parser("discover", help="find causal parents of one target variable")
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--target", required=True)
    _add_discovery_flags(p)
    p.add_argument("--max-report-subsets", type=int, default=4096)
    p.add_argument("-o", "--output", required=True, help="result JSON path")
    p.add_argument("--dot", default=None, help="also write the discovered graph as DOT")

    p = sub.add_parser("evaluate", help="reproduce the graph-reconstruction experiments")
    p.add_argument("--spec", required=True, help="builtin name or spec JSON path")
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--sims", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0, help="base seed; sim i uses seed+i")
    _add_discovery_flags(p)
    p.add_argument("-o", "--output", required=True, help="report JSON path")
    p.add_argument("--table", default=None, help="also write the text table here")

    p = sub.add_parser("graph", help="export a ground-truth or discovered graph as DOT")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="builtin name or spec JSON path (ground truth)")
    src.add_argument("--result", help="discovery result JSON (discovered parents)")
    p.add_argument("-o", "--output", required=True, help="output DOT path")

    return parser


def _workers(args) -> int:
    return args.workers if args.workers is not None else (os.cpu_count() or 1)


def _cmd_simulate(args) -> int:
    spec = _resolve_spec(args.spec)
    dataset = sem.simulate(spec, args.n, args.seed)
    io.write_dataset(dataset, args.output)
    print(f"wrote {dataset.values.shape[0]}x{dataset.values.shape[1]} dataset to {args.output}")
    return 0


def _cmd_discover(args) -> int:
    dataset = io.read_dataset(args.data)
    common = dict(
        k_envs=args.k_envs,
        alpha=args.alpha,
        min_leaf=args.min_leaf,
        env_fit_frac=args.env_fit_frac,
        workers=_workers(args),
    )
    if args.method == "v1":
        result = discover_v1(dataset, args.target, **common)
    else:
        result = discover_v2(
            dataset, args.target, alpha_vote=args.alpha_vote, cap=args.cap, **common
        )
    io.write_json(result.to_dict(max_report_subsets=args.max_report_subsets), args.output)
    if args.dot:
        doc = io.GraphDocument.from_parent_sets(
            dataset.names,
            {result.target: result.parents},
            metadata={"method": result.method, "alpha": result.alpha, "target": result.target},
        )
        io.export_dot(doc, args.dot)
    print(f"parents of {args.target}: {', '.join(result.parents) or '(none)'}")
    return 0


def _cmd_evaluate(args) -> int:
    spec = _resolve_spec(args.spec)
    report = evaluation.run_experiment(
        spec,
        method=args.method,
        n=args.n,
        n_sims=args.sims,
        base_seed=args.seed,
        k_envs=args.k_envs,
        alpha=args.alpha,
        alpha_vote=args.alpha_vote,
        cap=args.cap,
        min_leaf=args.min_leaf,
        env_fit_frac=args.env_fit_frac,
        workers=_workers(args),
    )
    io.write_json(report.to_dict(), args.output)
    table = evaluation.render_table([report])
    if args.table:
        Path(args.table).write_text(table)
    print(table, end="")
    return 0


def _cmd_graph(args) -> int:
    if args.spec:
        spec = _resolve_spec(args.spec)
        doc = io.GraphDocument.from_causal_graph(
            sem.ground_truth(spec), metadata={"spec": spec.name, "kind": "ground-truth"}
        )
    else:
        result = json.loads(Path(args.result).read_text())
        target = result["target"]
        nodes = sorted(set(result["per_partition"]) | {target})
        doc = io.GraphDocument.from_parent_sets(
            nodes,
            {target: tuple(result["parents"])},
            metadata={"method": result.get("method"), "target": target},
        )
    io.export_dot(doc, args.output)
    print(f"wrote {args.output}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "discover": _cmd_discover,
        "evaluate": _cmd_evaluate,
        "graph": _cmd_graph,
    }
    try:
        return handlers[args.command](args)
    except (sem.SpecValidationError, io.DatasetFormatError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
