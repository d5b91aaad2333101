"""Pipeline execution, trace persistence, provenance caching, and the
subprocess adapter for operators that live outside the process.

A run trace is a directory of greppable artifacts: the pipeline config, one
JSONL snapshot per node output, budget counters, and a provenance cache that
fills in as the run is debugged. Everything checksummed except the cache and
the timestamp, so re-running a deterministic pipeline reproduces the
artifact files byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .composition import BoundedResult, ChainStage, StoredProvenance, compose_chain
from .engine import (
    ProvenanceResult,
    compute_p_imp,
    compute_p_int,
    compute_p_uni,
    enumerate_bounded,
    enumerate_misets,
    result_from_misets,
)
from .errors import (
    CorruptTrace,
    NotUnique,
    OperatorFailure,
    ShapeViolation,
    UnknownRecord,
)
from .fastpaths import (
    minimize_witness,
    provenance_direct_scan,
    provenance_unique,
    witness_from_spec,
)
from .harness import build_operator
from .operators import ExecutionBudget, OperatorHandle, PropertyClass
from .pipeline import (
    PipelineGraph,
    dump_records_jsonl,
    load_records_jsonl,
    parse_pipeline_config,
    pipeline_config_to_dict,
    validate_pipeline,
)
from .records import Record, RecordId, RecordSet

DATA_DIR_ENV = "PROBER_DATA_DIR"
DEFAULT_TIMEOUT = 60.0
AUDIT_EVERY = 20  # recompute every 20th cache hit: a 5% soundness audit

BUILTIN_KINDS = (
    "identity",
    "splitter",
    "extractor",
    "dedup",
    "threshold",
    "join",
    "scorer",
    "top1",
    "rules",
)


def data_root(override: Optional[str | Path] = None) -> Path:
    """The store root: explicit argument, then $PROBER_DATA_DIR, then CWD."""
    if override is not None:
        return Path(override)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    return Path.cwd() / "prober-data"


# ---------------------------------------------------------------------------
# External subprocess operators
# ---------------------------------------------------------------------------


def external_operator_invoke(
    command: list[str],
    inputs: tuple[RecordSet, ...],
    timeout: float = DEFAULT_TIMEOUT,
) -> list[Record]:
    """Run ``cmd --input <port0-file> [--input <port1-file> ...]``.

    Each port file is UTF-8 JSON Lines of {"id", "value"}; the process must
    write records in the same format to stdout and exit 0.
    """
    with tempfile.TemporaryDirectory(prefix="prober-op-") as tmp:
        argv = list(command)
        for port, port_set in enumerate(inputs):
            port_file = Path(tmp) / f"port{port}.jsonl"
            dump_records_jsonl(port_set, port_file)
            argv += ["--input", str(port_file)]
        try:
            proc = subprocess.run(
                argv, capture_output=True, timeout=timeout, text=True, encoding="utf-8"
            )
        except subprocess.TimeoutExpired as exc:
            raise OperatorFailure(
                f"external operator timed out after {timeout}s: {command[0]}"
            ) from exc
        except OSError as exc:
            raise OperatorFailure(f"cannot invoke {command[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        raise OperatorFailure(
            f"external operator exited {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    out: list[Record] = []
    for lineno, line in enumerate(proc.stdout.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            value = obj["value"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise OperatorFailure(
                f"external operator stdout line {lineno} malformed: {exc}"
            ) from exc
        local = obj.get("id")
        if local is None:
            from .harness import mint

            out.append(mint(value))
        else:
            out.append(Record(RecordId(0, str(local)), value))
    return out


def make_external_operator(name: str, params: dict) -> OperatorHandle:
    command = list(params["command"])
    arity = int(params.get("arity", 1))
    timeout = float(params.get("timeout", DEFAULT_TIMEOUT))

    def fn(inputs: tuple[RecordSet, ...]) -> list[Record]:
        return external_operator_invoke(command, inputs, timeout)

    return OperatorHandle(name, arity, fn, backing="external")


def default_registry() -> dict[str, Callable[[str, dict], OperatorHandle]]:
    """Operator factories by config kind: the synthetic family plus external."""
    registry: dict[str, Callable[[str, dict], OperatorHandle]] = {
        kind: (lambda node_id, params, _k=kind: build_operator(_k, params, name=node_id))
        for kind in BUILTIN_KINDS
    }
    registry["external"] = make_external_operator
    return registry


# ---------------------------------------------------------------------------
# Run traces
# ---------------------------------------------------------------------------


def _canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(pipeline_doc: dict) -> str:
    return hashlib.sha256(_canonical_json(pipeline_doc).encode("utf-8")).hexdigest()


def derive_run_id(pipeline_doc: dict, inputs: RecordSet) -> str:
    h = hashlib.sha256()
    h.update(config_hash(pipeline_doc).encode())
    for r in inputs:
        h.update(str(r.id).encode())
        h.update(r.digest.encode())
    return "run-" + h.hexdigest()[:12]


@dataclass
class RunTrace:
    """One pipeline execution: immutable snapshots plus budget accounting."""

    run_id: str
    pipeline_doc: dict
    graph: PipelineGraph
    inputs: RecordSet
    node_outputs: dict[str, RecordSet]
    node_budgets: dict[str, dict]
    totals: dict
    shape_overrides: dict[str, PropertyClass] = field(default_factory=dict)
    _stored: dict[str, StoredProvenance] = field(default_factory=dict, repr=False)

    def node_input_ports(self, node_id: str) -> tuple[RecordSet, ...]:
        """Reconstruct a node's port-tagged input tuple from producer outputs."""
        edges = self.graph.incoming(node_id)
        ports: list[RecordSet] = []
        for e in edges:  # sorted by port
            ports.append(
                RecordSet(r.with_port(e.port) for r in self.node_outputs[e.producer])
            )
        return tuple(ports)

    def node_inputs_flat(self, node_id: str) -> RecordSet:
        flat: list[Record] = []
        for port_set in self.node_input_ports(node_id):
            flat.extend(port_set)
        return RecordSet(flat)

    def effective_shape(self, node_id: str) -> Optional[PropertyClass]:
        if node_id in self.shape_overrides:
            return self.shape_overrides[node_id]
        handle = self.graph.nodes[node_id].handle
        return handle.declared_shape if handle is not None else None

    def find_output(self, node_id: str, token: str) -> Record:
        """Resolve an output by id, exact text value, or unique digest prefix."""
        if node_id not in self.node_outputs:
            raise UnknownRecord(f"run {self.run_id} has no node {node_id!r}")
        outputs = self.node_outputs[node_id]
        for r in outputs:
            if str(r.id) == token or r.id.local == token:
                return r
        by_value = [r for r in outputs if isinstance(r.value, str) and r.value == token]
        if len(by_value) == 1:
            return by_value[0]
        if len(by_value) > 1:
            raise UnknownRecord(
                f"value {token!r} names {len(by_value)} records on node {node_id!r}; use an id or digest"
            )
        matches = [
            r for r in outputs if len(token) >= 8 and r.digest.startswith(token)
        ]
        if len(matches) == 1:
            return matches[0]
        if len(matches) > 1:
            raise UnknownRecord(
                f"digest prefix {token!r} is ambiguous on node {node_id!r}"
            )
        raise UnknownRecord(f"no output {token!r} recorded for node {node_id!r}")

    def stored_provenance(
        self, node_id: str, budget: Optional[ExecutionBudget] = None
    ) -> StoredProvenance:
        """Per-node complete minimal-subset table, built once and kept."""
        if node_id not in self._stored:
            node = self.graph.nodes[node_id]
            self._stored[node_id] = StoredProvenance.build(
                node.handle, self.node_inputs_flat(node_id), budget
            )
        return self._stored[node_id]


def run_pipeline(
    graph: PipelineGraph,
    source_inputs: RecordSet,
    budget: Optional[ExecutionBudget] = None,
    run_id: Optional[str] = None,
) -> RunTrace:
    """Execute the graph in topological order, snapshotting every node output.

    Deterministic operators plus canonical record ordering make the trace
    reproducible byte for byte.
    """
    violations = validate_pipeline(graph)
    if violations:
        raise ValueError("invalid pipeline: " + "; ".join(violations))
    budget = budget if budget is not None else ExecutionBudget.unlimited()
    pipeline_doc = pipeline_config_to_dict(graph)
    node_outputs: dict[str, RecordSet] = {}
    node_budgets: dict[str, dict] = {}
    for node in graph.topological_order():
        before = budget.spent()
        if node.is_source:
            node_outputs[node.id] = source_inputs
        else:
            flat: list[Record] = []
            for e in graph.incoming(node.id):
                flat.extend(
                    r.with_port(e.port) for r in node_outputs[e.producer]
                )
            try:
                node_outputs[node.id] = node.handle.apply_counted(
                    RecordSet(flat), budget
                )
            except OperatorFailure as exc:
                raise OperatorFailure(f"node {node.id!r}: {exc}") from exc
        after = budget.spent()
        node_budgets[node.id] = {k: after[k] - before[k] for k in after}
    return RunTrace(
        run_id or derive_run_id(pipeline_doc, source_inputs),
        pipeline_doc,
        graph,
        source_inputs,
        node_outputs,
        node_budgets,
        budget.spent(),
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _tree_checksum(run_dir: Path) -> str:
    """Hash of every artifact file except the volatile ones (meta.json holds
    the timestamp and this hash; provenance/ fills in after the run)."""
    h = hashlib.sha256()
    for path in sorted(run_dir.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(run_dir).as_posix()
        if rel == "meta.json" or rel.startswith("provenance/"):
            continue
        h.update(rel.encode("utf-8"))
        h.update(b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


def persist_trace(trace: RunTrace, root: Optional[str | Path] = None) -> Path:
    run_dir = data_root(root) / trace.run_id
    (run_dir / "outputs").mkdir(parents=True, exist_ok=True)
    (run_dir / "provenance").mkdir(exist_ok=True)

    config_doc = {
        "run_id": trace.run_id,
        "config_hash": config_hash(trace.pipeline_doc),
        "pipeline": trace.pipeline_doc,
    }
    (run_dir / "config.json").write_text(
        json.dumps(config_doc, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    dump_records_jsonl(trace.inputs, run_dir / "inputs.jsonl")
    for node_id, outputs in trace.node_outputs.items():
        dump_records_jsonl(outputs, run_dir / "outputs" / f"{node_id}.jsonl")
    budgets_doc = {"nodes": trace.node_budgets, "totals": trace.totals}
    (run_dir / "budgets.json").write_text(
        json.dumps(budgets_doc, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    meta = {
        "run_id": trace.run_id,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "checksum": _tree_checksum(run_dir),
    }
    (run_dir / "meta.json").write_text(
        json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    return run_dir


def load_trace(
    run_id: str,
    root: Optional[str | Path] = None,
    registry: Optional[dict] = None,
) -> RunTrace:
    run_dir = data_root(root) / run_id
    if not run_dir.is_dir():
        raise FileNotFoundError(f"no run {run_id!r} under {run_dir.parent}")
    if not (run_dir / "meta.json").is_file():
        raise CorruptTrace(f"trace at {run_dir} has no meta.json")
    meta = json.loads((run_dir / "meta.json").read_text(encoding="utf-8"))
    config_doc = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
    if config_hash(config_doc["pipeline"]) != config_doc.get("config_hash"):
        raise CorruptTrace(
            f"config drift: stored hash does not match pipeline config in {run_dir}"
        )
    actual = _tree_checksum(run_dir)
    if actual != meta.get("checksum"):
        raise CorruptTrace(f"checksum mismatch for trace {run_id}")

    graph = parse_pipeline_config(
        config_doc["pipeline"], registry or default_registry()
    )
    inputs = load_records_jsonl(run_dir / "inputs.jsonl")
    node_outputs = {
        p.stem: load_records_jsonl(p) for p in sorted((run_dir / "outputs").glob("*.jsonl"))
    }
    budgets_doc = json.loads((run_dir / "budgets.json").read_text(encoding="utf-8"))
    return RunTrace(
        config_doc["run_id"],
        config_doc["pipeline"],
        graph,
        inputs,
        node_outputs,
        budgets_doc["nodes"],
        budgets_doc["totals"],
    )


def list_runs(root: Optional[str | Path] = None) -> list[dict]:
    base = data_root(root)
    out = []
    if not base.is_dir():
        return out
    for run_dir in sorted(base.iterdir()):
        meta_path = run_dir / "meta.json"
        if not meta_path.is_file():
            continue
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        config_doc = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
        out.append(
            {
                "run_id": meta["run_id"],
                "created_at": meta.get("created_at"),
                "nodes": len(config_doc["pipeline"].get("nodes", [])),
            }
        )
    return out


# ---------------------------------------------------------------------------
# Provenance cache
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProvenanceCacheKey:
    run_id: str
    node_id: str
    digest: str
    kind: str
    k: Optional[int] = None
    bound: Optional[int] = None
    chain: bool = False
    mode: str = "exact"

    def filename(self) -> str:
        parts = [self.node_id, self.digest[:16], self.kind]
        if self.k is not None:
            parts.append(f"k{self.k}")
        if self.bound is not None:
            parts.append(f"B{self.bound}")
        if self.chain:
            parts.append("chain-" + self.mode)
        return "__".join(parts) + ".json"


class ProvenanceStore:
    """File-backed result cache; hits return the stored bytes unchanged.

    Every ``audit_every``-th hit per key recomputes the result and compares
    bytes, so silent drift in operators or trace data surfaces as
    CorruptTrace instead of stale answers.
    """

    def __init__(self, run_dir: Path, audit_every: int = AUDIT_EVERY):
        self.dir = Path(run_dir) / "provenance"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.audit_every = max(int(audit_every), 1) if audit_every else 0
        self._hits: dict[str, int] = {}

    def path_for(self, key: ProvenanceCacheKey) -> Path:
        return self.dir / key.filename()

    def get(self, key: ProvenanceCacheKey) -> tuple[Optional[bytes], bool]:
        """(stored bytes or None, whether this hit is an audit hit)."""
        path = self.path_for(key)
        if not path.is_file():
            return None, False
        name = key.filename()
        self._hits[name] = self._hits.get(name, 0) + 1
        audit = bool(self.audit_every) and self._hits[name] % self.audit_every == 0
        return path.read_bytes(), audit

    def put(self, key: ProvenanceCacheKey, payload: bytes) -> None:
        tmp = self.path_for(key).with_suffix(".tmp")
        tmp.write_bytes(payload)
        tmp.replace(self.path_for(key))


def _serialize_result(doc: dict) -> bytes:
    return _canonical_json(doc).encode("utf-8")


# ---------------------------------------------------------------------------
# Provenance dispatch
# ---------------------------------------------------------------------------


def _validate_request(kind: str, k: Optional[int], bound: Optional[int]) -> None:
    if kind not in ("all", "any", "uni", "int", "imp"):
        raise ValueError(f"unknown provenance kind {kind!r}")
    if k is not None and kind != "any":
        raise ValueError("k applies only to kind=any")
    if k is not None and k < 1:
        raise ValueError("k must be >= 1")
    if bound is not None and kind != "all":
        raise ValueError("a size bound applies only to kind=all")
    if bound is not None and bound < 0:
        raise ValueError("bound must be >= 0")


def _node_witness(node) -> tuple[Optional[dict], Optional[list]]:
    table = node.params.get("witness_table") if node.params else None
    rules = node.params.get("witness_rules") if node.params else None
    return table, rules


def _compute_node_provenance(
    trace: RunTrace,
    node_id: str,
    target: Record,
    kind: str,
    k: Optional[int],
    bound: Optional[int],
    budget: ExecutionBudget,
) -> ProvenanceResult:
    node = trace.graph.nodes[node_id]
    op = node.handle
    inputs = trace.node_inputs_flat(node_id)
    shape = trace.effective_shape(node_id)

    if kind == "int":
        return compute_p_int(op, inputs, target, budget)
    if kind == "imp":
        return compute_p_imp(op, inputs, target, budget)

    if bound is not None:
        return enumerate_bounded(op, inputs, target, bound, budget)

    if shape in (PropertyClass.ONE_TO_ONE, PropertyClass.ONE_TO_MANY):
        try:
            return provenance_direct_scan(op, inputs, target, kind, budget, requested_k=k)
        except ShapeViolation:
            # the declaration lied; remember that and fall back to search
            trace.shape_overrides[node_id] = PropertyClass.ARBITRARY

    table, rules = _node_witness(node)
    if kind == "any" and k == 1 and (table or rules):
        try:
            witness = witness_from_spec(op, inputs, target, table=table, rules=rules, budget=budget)
            first = minimize_witness(op, witness, target, budget)
            return result_from_misets(
                "any", [first], exact=True, truncated=False, budget=budget, requested_k=1
            )
        except Exception:
            pass  # stale or missing declaration; the engine path still works

    if kind == "uni":
        try:
            return provenance_unique(op, inputs, target, budget, which="uni")
        except NotUnique:
            return compute_p_uni(op, inputs, target, budget)

    stream = enumerate_misets(op, inputs, target, k, budget)
    found = list(stream)
    return result_from_misets(
        kind,
        found,
        exact=stream.exhausted or (k is not None and len(found) == k),
        truncated=stream.truncated,
        budget=budget,
        requested_k=k,
    )


def chain_stages(
    trace: RunTrace, node_id: str, budget: Optional[ExecutionBudget] = None
) -> list[ChainStage]:
    """Stored provenance for every operator on the path source → node."""
    path = trace.graph.upstream_chain(node_id)
    stages = []
    for node in path:
        if node.is_source:
            continue
        stages.append(
            ChainStage(
                node.handle,
                trace.stored_provenance(node.id, budget),
                trace.effective_shape(node.id),
            )
        )
    if not stages:
        raise ValueError(f"node {node_id!r} has no upstream operators to compose")
    return stages


def provenance_get_or_compute(
    trace: RunTrace,
    node_id: str,
    token: str,
    kind: str,
    k: Optional[int] = None,
    bound: Optional[int] = None,
    budget: Optional[ExecutionBudget] = None,
    store: Optional[ProvenanceStore] = None,
    chain: bool = False,
    mode: str = "exact",
) -> dict:
    """Resolve → cache-check → dispatch → persist; returns the JSON document.

    Cache hits return the stored bytes' parse, so two identical requests get
    byte-identical serialized results and the second costs no executions
    (except scheduled audit hits, which recompute on purpose).
    """
    _validate_request(kind, k, bound)
    target = trace.find_output(node_id, token)
    budget = budget if budget is not None else ExecutionBudget.unlimited()
    key = ProvenanceCacheKey(
        trace.run_id, node_id, target.digest, kind, k, bound, chain, mode
    )

    def compute() -> dict:
        if chain:
            result = compose_chain(
                chain_stages(trace, node_id, budget), target, kind,
                requested_k=k, budget=budget, mode=mode,
            )
        else:
            result = _compute_node_provenance(
                trace, node_id, target, kind, k, bound, budget
            )
        doc = result.to_json_dict()
        doc.update(
            {
                "run_id": trace.run_id,
                "node_id": node_id,
                "target_digest": target.digest,
                "target_id": str(target.id),
                "chain": chain,
            }
        )
        return doc

    if store is None:
        return compute()

    cached, audit = store.get(key)
    if cached is not None:
        cached_doc = json.loads(cached.decode("utf-8"))
        if audit:
            # cost counters legitimately differ on recomputation (warm
            # operator caches); the provenance content must not
            fresh = dict(compute())
            expected = dict(cached_doc)
            fresh.pop("budget_spent", None)
            expected.pop("budget_spent", None)
            if fresh != expected:
                raise CorruptTrace(
                    f"provenance cache audit mismatch for {key.filename()}"
                )
        return cached_doc

    doc = compute()
    store.put(key, _serialize_result(doc))
    return doc
