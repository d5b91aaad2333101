"""Command-line entry points.

Exit codes: 0 success, 1 user error (bad arguments, unknown records or
runs), 2 engine error (budget exhaustion, operator failures, corrupt
traces). Every subcommand takes --json for machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .errors import (
    BudgetExhausted,
    CorruptTrace,
    OperatorFailure,
    ProberError,
    UnknownRecord,
)
from .operators import ExecutionBudget
from .pipeline import load_records_jsonl, parse_pipeline_config
from .properties import infer_properties
from .runtime import (
    ProvenanceStore,
    data_root,
    default_registry,
    load_trace,
    persist_trace,
    provenance_get_or_compute,
    run_pipeline,
)

USER_ERROR = 1
ENGINE_ERROR = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="prober", description="pipeline provenance debugger")
    parser.add_argument("--data-dir", default=None, help="trace store root (default $PROBER_DATA_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a pipeline config over a record file")
    p_run.add_argument("config", help="pipeline config JSON file")
    p_run.add_argument("inputs", help="source records, JSON Lines")
    p_run.add_argument("--json", action="store_true")

    p_trace = sub.add_parser("trace", help="provenance of one recorded output")
    p_trace.add_argument("run_id")
    p_trace.add_argument("record", help="output record id, digest, or digest prefix")
    p_trace.add_argument("--node", default=None, help="node id (default: sink)")
    p_trace.add_argument("--kind", default="all", choices=["all", "any", "uni", "int", "imp"])
    p_trace.add_argument("--k", type=int, default=None)
    p_trace.add_argument("--bound", type=int, default=None)
    p_trace.add_argument("--budget", type=int, default=None)
    p_trace.add_argument("--chain", action="store_true", help="compose back to the pipeline source")
    p_trace.add_argument("--mode", default="exact", choices=["exact", "bounds"])
    p_trace.add_argument("--json", action="store_true")

    p_infer = sub.add_parser("infer-props", help="sample a node's operator for shape evidence")
    p_infer.add_argument("run_id")
    p_infer.add_argument("--node", required=True)
    p_infer.add_argument("--trials", type=int, default=32)
    p_infer.add_argument("--seed", type=int, default=1)
    p_infer.add_argument("--json", action="store_true")

    p_oracle = sub.add_parser("oracle", help="engine versus frozen golden sets")
    p_oracle.add_argument("--live", action="store_true", help="also recompute the brute-force oracle")
    p_oracle.add_argument("--json", action="store_true")

    p_bench = sub.add_parser("bench", help="execution-count contracts over the instance matrix")
    p_bench.add_argument("--json", action="store_true")

    p_serve = sub.add_parser("serve", help="start the HTTP debugging service")
    p_serve.add_argument("--addr", default="127.0.0.1:7070")

    return parser


def _emit(doc: dict, as_json: bool, human: str) -> None:
    if as_json:
        print(json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False))
    else:
        print(human)


def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    pipeline_doc = config.get("pipeline", config)
    graph = parse_pipeline_config(pipeline_doc, default_registry())
    inputs = load_records_jsonl(args.inputs)
    trace = run_pipeline(graph, inputs)
    run_dir = persist_trace(trace, args.data_dir)
    sink = trace.graph.sink.id
    doc = {
        "run_id": trace.run_id,
        "trace_dir": str(run_dir),
        "nodes": {n: len(rs) for n, rs in trace.node_outputs.items()},
        "totals": trace.totals,
    }
    _emit(
        doc,
        args.json,
        f"run {trace.run_id}: {len(trace.node_outputs[sink])} sink records, "
        f"{trace.totals['executions']} executions -> {run_dir}",
    )
    return 0


def _cmd_trace(args) -> int:
    trace = load_trace(args.run_id, args.data_dir)
    node = args.node or trace.graph.sink.id
    budget = ExecutionBudget(limit=args.budget) if args.budget else ExecutionBudget.unlimited()
    store = ProvenanceStore(data_root(args.data_dir) / args.run_id)
    doc = provenance_get_or_compute(
        trace,
        node,
        args.record,
        args.kind,
        k=args.k,
        bound=args.bound,
        budget=budget,
        store=store,
        chain=args.chain,
        mode=args.mode,
    )
    if args.json:
        _emit(doc, True, "")
        return 0
    lines = [f"{args.kind} provenance of {doc['target_id']} at node {node}"]
    if "misets" in doc:
        for i, m in enumerate(doc["misets"], start=1):
            lines.append(f"  miset {i}: {', '.join(m)}")
    if "records" in doc:
        lines.append("  records: " + (", ".join(doc["records"]) or "(empty)"))
    if "impacts" in doc:
        for item in doc["impacts"]:
            lines.append(f"  {item['id']}: {item['count']}")
    if "relation" in doc:
        lines.append(f"  relation: {doc['relation']}")
    if "exact" in doc:
        lines.append(f"  exact: {doc['exact']}")
    print("\n".join(lines))
    return 0


def _cmd_infer(args) -> int:
    trace = load_trace(args.run_id, args.data_dir)
    if args.node not in trace.graph.nodes or trace.graph.nodes[args.node].is_source:
        raise _UsageError(f"no operator node {args.node!r} in run {args.run_id}")
    pool = trace.node_inputs_flat(args.node)
    shape, report = infer_properties(
        trace.graph.nodes[args.node].handle, pool, trials=args.trials, seed=args.seed
    )
    doc = report.to_json_dict()
    _emit(
        doc,
        args.json,
        f"node {args.node}: shape={shape.value} monotone={report.monotone.verdict}"
        + (" (heuristic)" if report.heuristic else ""),
    )
    return 0


def _cmd_oracle(args) -> int:
    from .harness import run_oracle_suite

    report = run_oracle_suite(live=args.live)
    if report["agree"]:
        _emit(report, args.json, f"all {report['instances']} instances agree")
        return 0
    _emit(report, args.json, f"{len(report['failures'])} instances disagree")
    return ENGINE_ERROR


def _cmd_bench(args) -> int:
    from .engine import compute_p_int, find_any_miset, is_unique_miset
    from .harness import load_frozen_matrix

    rows = []
    for inst, _ in load_frozen_matrix():
        n = len(inst.inputs)
        b_find = ExecutionBudget.unlimited()
        find_any_miset(inst.make(), inst.inputs, inst.target, b_find)
        b_uni = ExecutionBudget.unlimited()
        is_unique_miset(inst.make(), inst.inputs, inst.target, b_uni)
        b_int = ExecutionBudget.unlimited()
        compute_p_int(inst.make(), inst.inputs, inst.target, b_int)
        rows.append(
            {
                "name": inst.name,
                "n": n,
                "find_any": b_find.executions,
                "find_any_limit": n + 1,
                "is_unique": b_uni.executions,
                "is_unique_limit": 2 * n + 1,
                "p_int": b_int.executions,
                "p_int_limit": n + 1,
            }
        )
    worst = {
        "find_any": max(r["find_any"] / r["find_any_limit"] for r in rows),
        "is_unique": max(r["is_unique"] / r["is_unique_limit"] for r in rows),
        "p_int": max(r["p_int"] / r["p_int_limit"] for r in rows),
    }
    doc = {"instances": rows, "worst_ratio": worst}
    _emit(
        doc,
        args.json,
        "\n".join(
            f"{r['name']}: find_any {r['find_any']}/{r['find_any_limit']}  "
            f"unique {r['is_unique']}/{r['is_unique_limit']}  "
            f"p_int {r['p_int']}/{r['p_int_limit']}"
            for r in rows
        ),
    )
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        raise _UsageError(f"--addr must be host:port, got {args.addr!r}")
    serve(args.data_dir, (host, int(port)))
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "trace": _cmd_trace,
    "infer-props": _cmd_infer,
    "oracle": _cmd_oracle,
    "bench": _cmd_bench,
    "serve": _cmd_serve,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    except (FileNotFoundError, UnknownRecord) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    except (BudgetExhausted, OperatorFailure, CorruptTrace) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return ENGINE_ERROR
    except ProberError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return ENGINE_ERROR


if __name__ == "__main__":
    sys.exit(main())
