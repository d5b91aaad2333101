"""Pipeline graphs: operator DAGs with one source and one sink.

A pipeline is a DAG whose nodes wrap operators and whose edges say which
node's output feeds which input port of a downstream node. One distinguished
node (the source) has no incoming edges and emits the run's input records
verbatim; one (the sink) has no outgoing edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

from .operators import OperatorHandle, PropertyClass, SpecLevel
from .records import Record, RecordSet

SOURCE_KIND = "source"


@dataclass(frozen=True)
class Edge:
    producer: str
    consumer: str
    port: int

    def __post_init__(self):
        if self.port < 0:
            raise ValueError(f"edge port must be non-negative, got {self.port}")


@dataclass
class PipelineNode:
    id: str
    kind: str
    params: dict = field(default_factory=dict)
    handle: Optional[OperatorHandle] = None

    @property
    def is_source(self) -> bool:
        return self.kind == SOURCE_KIND


class PipelineGraph:
    """Nodes plus edges, with lookups for validation and execution."""

    def __init__(self, nodes: list[PipelineNode], edges: list[Edge]):
        self.nodes: dict[str, PipelineNode] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise ValueError(f"duplicate node id {n.id!r}")
            self.nodes[n.id] = n
        self.edges: tuple[Edge, ...] = tuple(edges)
        for e in self.edges:
            if e.producer not in self.nodes or e.consumer not in self.nodes:
                raise ValueError(f"edge {e} references unknown node")

    def incoming(self, node_id: str) -> list[Edge]:
        return sorted(
            (e for e in self.edges if e.consumer == node_id), key=lambda e: e.port
        )

    def outgoing(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.producer == node_id]

    @property
    def source(self) -> PipelineNode:
        roots = [n for n in self.nodes.values() if not self.incoming(n.id)]
        if len(roots) != 1:
            raise ValueError(f"pipeline must have exactly one source, found {len(roots)}")
        return roots[0]

    @property
    def sink(self) -> PipelineNode:
        leaves = [n for n in self.nodes.values() if not self.outgoing(n.id)]
        if len(leaves) != 1:
            raise ValueError(f"pipeline must have exactly one sink, found {len(leaves)}")
        return leaves[0]

    def topological_order(self) -> list[PipelineNode]:
        indegree = {nid: len(self.incoming(nid)) for nid in self.nodes}
        ready = sorted(nid for nid, d in indegree.items() if d == 0)
        order = []
        while ready:
            nid = ready.pop(0)
            order.append(self.nodes[nid])
            for e in self.outgoing(nid):
                indegree[e.consumer] -= 1
                if indegree[e.consumer] == 0:
                    ready.append(e.consumer)
            ready.sort()
        if len(order) != len(self.nodes):
            raise ValueError("pipeline graph contains a cycle")
        return order

    def upstream_chain(self, node_id: str) -> list[PipelineNode]:
        """The single path source..node, for chain provenance; fails on joins."""
        chain = [self.nodes[node_id]]
        while True:
            incoming = self.incoming(chain[0].id)
            if not incoming:
                break
            producers = {e.producer for e in incoming}
            if len(producers) > 1:
                raise ValueError(
                    f"node {chain[0].id!r} has multiple upstream producers; not a chain"
                )
            chain.insert(0, self.nodes[next(iter(producers))])
        return chain


def validate_pipeline(g: PipelineGraph) -> list[str]:
    """Return human-readable invariant violations; an empty list means ok."""
    violations = []
    roots = [n.id for n in g.nodes.values() if not g.incoming(n.id)]
    leaves = [n.id for n in g.nodes.values() if not g.outgoing(n.id)]
    if len(roots) != 1:
        violations.append(f"expected exactly one source node, found {sorted(roots)}")
    if len(leaves) != 1:
        violations.append(f"expected exactly one sink node, found {sorted(leaves)}")

    try:
        g.topological_order()
    except ValueError:
        violations.append("cycle detected")

    for node in g.nodes.values():
        incoming = g.incoming(node.id)
        ports = [e.port for e in incoming]
        if len(ports) != len(set(ports)):
            violations.append(f"node {node.id!r} has multiple edges into one port")
        if node.is_source:
            if incoming:
                violations.append(f"source node {node.id!r} must have no incoming edges")
            continue
        arity = node.handle.arity if node.handle is not None else max(ports, default=-1) + 1
        expected = list(range(arity))
        if sorted(set(ports)) != expected:
            violations.append(
                f"node {node.id!r} ports {sorted(set(ports))} do not cover 0..{arity - 1}"
            )
    return violations


OperatorFactory = Callable[[str, dict], OperatorHandle]

_SPEC_LEVELS = {lv.value: lv for lv in SpecLevel}
_SHAPES = {pc.value: pc for pc in PropertyClass}


def parse_pipeline_config(doc: dict, registry: dict[str, OperatorFactory]) -> PipelineGraph:
    """Build a graph from the config document {nodes: [...], edges: [...]}.

    Each node entry is {id, kind, params, spec_level, declared_shape?}; the
    registry maps kinds to operator builders. Source nodes need no builder.
    """
    nodes = []
    for spec in doc.get("nodes", []):
        node_id = spec["id"]
        kind = spec["kind"]
        params = spec.get("params", {})
        node = PipelineNode(node_id, kind, params)
        if kind != SOURCE_KIND:
            if kind not in registry:
                raise ValueError(f"unknown operator kind {kind!r} for node {node_id!r}")
            handle = registry[kind](node_id, params)
            if "spec_level" in spec:
                handle.spec_level = _SPEC_LEVELS[spec["spec_level"]]
            if "declared_shape" in spec:
                handle.declared_shape = _SHAPES[spec["declared_shape"]]
            node.handle = handle
        nodes.append(node)
    edges = [Edge(e["from"], e["to"], e.get("port", 0)) for e in doc.get("edges", [])]
    return PipelineGraph(nodes, edges)


def pipeline_config_to_dict(g: PipelineGraph) -> dict:
    nodes = []
    for n in g.nodes.values():
        entry: dict = {"id": n.id, "kind": n.kind, "params": n.params}
        if n.handle is not None:
            entry["spec_level"] = n.handle.spec_level.value
            if n.handle.declared_shape is not None:
                entry["declared_shape"] = n.handle.declared_shape.value
        nodes.append(entry)
    edges = [{"from": e.producer, "to": e.consumer, "port": e.port} for e in g.edges]
    return {"nodes": nodes, "edges": edges}


def load_records_jsonl(path) -> RecordSet:
    """Read a record file: JSON Lines of {"id": str, "value": str|object}."""
    from .records import RecordId

    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(Record(RecordId(0, obj["id"]), obj["value"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad record line: {exc}") from exc
    return RecordSet(out)


def dump_records_jsonl(records: RecordSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {"id": r.id.local, "value": r.value}
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")
