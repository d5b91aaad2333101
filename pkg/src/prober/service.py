"""Local HTTP debugging service over persisted run traces.

Read endpoints expose runs, graphs, and recorded outputs; the provenance
endpoint answers either with a complete JSON document or, for the
enumerating kinds, with a server-sent-event stream that delivers minimal
subsets as they are found. Each request owns its execution budget, and a
dropped client cancels enumeration at the next execution check.
"""

from __future__ import annotations

import json
import re
import select
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .engine import enumerate_misets
from .errors import (
    BudgetExhausted,
    Cancelled,
    ProberError,
    ShapeViolation,
    UnknownRecord,
)
from .fastpaths import provenance_direct_scan
from .operators import ExecutionBudget, PropertyClass
from .runtime import (
    AUDIT_EVERY,
    ProvenanceStore,
    RunTrace,
    data_root,
    list_runs,
    load_trace,
    provenance_get_or_compute,
)

DEFAULT_ADDR = ("127.0.0.1", 7070)
DEFAULT_REQUEST_BUDGET = 10_000
DEFAULT_PAGE_SIZE = 50

_RUNS = re.compile(r"^/runs/?$")
_GRAPH = re.compile(r"^/runs/([^/]+)/graph$")
_OUTPUTS = re.compile(r"^/runs/([^/]+)/nodes/([^/]+)/outputs$")
_PROVENANCE = re.compile(r"^/runs/([^/]+)/provenance$")


class ServiceState:
    """Shared immutable-trace registry plus per-request instrumentation."""

    def __init__(self, root: Optional[str | Path] = None, audit_every: int = AUDIT_EVERY):
        self.root = data_root(root)
        self.audit_every = audit_every
        self._traces: dict[str, RunTrace] = {}
        self._stores: dict[str, ProvenanceStore] = {}
        self._lock = threading.Lock()
        self.request_budgets: list[ExecutionBudget] = []

    def trace(self, run_id: str) -> RunTrace:
        with self._lock:
            if run_id not in self._traces:
                self._traces[run_id] = load_trace(run_id, self.root)
            return self._traces[run_id]

    def store(self, run_id: str) -> ProvenanceStore:
        with self._lock:
            if run_id not in self._stores:
                self._stores[run_id] = ProvenanceStore(
                    self.root / run_id, self.audit_every
                )
            return self._stores[run_id]


def graph_document(trace: RunTrace) -> dict:
    nodes = []
    for n in trace.graph.topological_order():
        shape = trace.effective_shape(n.id)
        nodes.append(
            {
                "id": n.id,
                "kind": n.kind,
                "shape": shape.value if shape is not None else None,
                "params": n.params,
                "output_count": len(trace.node_outputs.get(n.id, ())),
            }
        )
    edges = [
        {"from": e.producer, "to": e.consumer, "port": e.port}
        for e in trace.graph.edges
    ]
    return {
        "run_id": trace.run_id,
        "nodes": nodes,
        "edges": edges,
        "source": trace.graph.source.id,
        "sink": trace.graph.sink.id,
    }


def outputs_page(trace: RunTrace, node_id: str, page: int, page_size: int) -> dict:
    if node_id not in trace.node_outputs:
        raise UnknownRecord(f"run {trace.run_id} has no node {node_id!r}")
    records = list(trace.node_outputs[node_id])
    start = page * page_size
    chunk = records[start : start + page_size]
    return {
        "run_id": trace.run_id,
        "node_id": node_id,
        "page": page,
        "page_size": page_size,
        "total": len(records),
        "has_more": start + page_size < len(records),
        "records": [
            {"id": str(r.id), "value": r.value, "digest": r.digest} for r in chunk
        ],
    }


def sse_event(name: bytes, payload) -> bytes:
    data = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return b"event: " + name + b"\ndata: " + data.encode("utf-8") + b"\n\n"


class ProberRequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    state: ServiceState  # set by make_server

    # -- plumbing ---------------------------------------------------------

    def log_message(self, fmt, *args):
        pass  # a debugging service should not spam the debugee's terminal

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type, Accept")

    def _send_json(self, code: int, doc: dict):
        body = json.dumps(doc, sort_keys=True, ensure_ascii=False).encode("utf-8")
        self.send_response(code)
        self._cors()
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _client_gone(self) -> bool:
        try:
            readable, _, _ = select.select([self.connection], [], [], 0)
            if not readable:
                return False
            return self.connection.recv(1, socket.MSG_PEEK) == b""
        except OSError:
            return True

    # -- routes -----------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        url = urlparse(self.path)
        try:
            if _RUNS.match(url.path):
                self._send_json(200, {"runs": list_runs(self.state.root)})
                return
            m = _GRAPH.match(url.path)
            if m:
                self._send_json(200, graph_document(self.state.trace(m.group(1))))
                return
            m = _OUTPUTS.match(url.path)
            if m:
                query = parse_qs(url.query)
                page = int(query.get("page", ["0"])[0])
                page_size = int(query.get("page_size", [str(DEFAULT_PAGE_SIZE)])[0])
                if page < 0 or page_size < 1:
                    self._send_json(400, {"error": "page and page_size must be nonnegative"})
                    return
                doc = outputs_page(self.state.trace(m.group(1)), m.group(2), page, page_size)
                self._send_json(200, doc)
                return
            self._send_json(404, {"error": f"no route for {url.path}"})
        except (UnknownRecord, FileNotFoundError) as exc:
            self._send_json(404, {"error": str(exc)})
        except ProberError as exc:
            self._send_json(404, {"error": str(exc)})
        except ValueError as exc:
            self._send_json(400, {"error": str(exc)})

    def do_POST(self):
        url = urlparse(self.path)
        m = _PROVENANCE.match(url.path)
        if not m:
            self._send_json(404, {"error": f"no route for {url.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._send_json(400, {"error": "request body must be JSON"})
            return
        try:
            trace = self.state.trace(m.group(1))
        except (ProberError, FileNotFoundError) as exc:
            self._send_json(404, {"error": str(exc)})
            return
        self._handle_provenance(trace, body)

    # -- provenance -------------------------------------------------------

    def _handle_provenance(self, trace: RunTrace, body: dict):
        kind = body.get("kind", "all")
        node_id = body.get("node_id", trace.graph.sink.id)
        token = body.get("record", "")
        k = body.get("k")
        bound = body.get("bound")
        chain = bool(body.get("chain", False))
        mode = body.get("mode", "exact")
        limit = body.get("budget", DEFAULT_REQUEST_BUDGET)
        wants_stream = "text/event-stream" in self.headers.get("Accept", "")

        budget = ExecutionBudget(limit=limit, cancel_check=self._client_gone)
        self.state.request_budgets.append(budget)

        if wants_stream:
            if kind not in ("any", "all") or chain:
                self._send_json(
                    400,
                    {"error": "streaming requires kind=any or kind=all on a single node"},
                )
                return
            self._stream_misets(trace, node_id, token, kind, k, bound, budget)
            return

        try:
            doc = provenance_get_or_compute(
                trace,
                node_id,
                token,
                kind,
                k=k,
                bound=bound,
                budget=budget,
                store=self.state.store(trace.run_id),
                chain=chain,
                mode=mode,
            )
            self._send_json(200, doc)
        except UnknownRecord as exc:
            self._send_json(404, {"error": str(exc)})
        except BudgetExhausted as exc:
            self._send_json(
                409, {"error": "budget_exhausted", "detail": str(exc), "budget_spent": budget.spent()}
            )
        except (ValueError, ProberError) as exc:
            self._send_json(400, {"error": str(exc)})

    def _stream_misets(self, trace, node_id, token, kind, k, bound, budget):
        try:
            target = trace.find_output(node_id, token)
        except UnknownRecord as exc:
            self._send_json(404, {"error": str(exc)})
            return
        try:
            if k is not None and kind != "any":
                raise ValueError("k applies only to kind=any")
            if bound is not None and kind != "all":
                raise ValueError("a size bound applies only to kind=all")
        except ValueError as exc:
            self._send_json(400, {"error": str(exc)})
            return

        self.send_response(200)
        self._cors()
        self.send_header("Content-Type", "text/event-stream; charset=utf-8")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Connection", "close")
        self.end_headers()
        self.close_connection = True

        def emit(name: bytes, payload) -> bool:
            try:
                self.wfile.write(sse_event(name, payload))
                self.wfile.flush()
                return True
            except OSError:
                return False

        exhausted = False
        truncated = False
        error: Optional[str] = None
        try:
            for miset in self._miset_sequence(trace, node_id, target, kind, k, bound, budget):
                if not emit(b"miset", sorted(str(r.id) for r in miset)):
                    return
            exhausted = self._last_exhausted
            truncated = self._last_truncated
        except BudgetExhausted:
            truncated = True
            error = "budget_exhausted"
        except Cancelled:
            return  # client is gone; nobody is listening for a done event
        except UnknownRecord as exc:
            emit(b"error", {"error": str(exc)})
            return
        except (ValueError, ProberError) as exc:
            emit(b"error", {"error": str(exc)})
            return
        done = {"exhausted": exhausted, "truncated": truncated, "budgetSpent": budget.spent()}
        if error:
            done["error"] = error
        emit(b"done", done)

    def _miset_sequence(self, trace, node_id, target, kind, k, bound, budget):
        """Yield minimal subsets in exactly the order the JSON path reports
        them, so a drained stream equals the non-streamed result."""
        self._last_exhausted = False
        self._last_truncated = False
        if bound is not None:
            result = trace_bounded(trace, node_id, target, bound, budget)
            self._last_exhausted = result.exact
            self._last_truncated = result.truncated
            yield from result.misets
            return
        shape = trace.effective_shape(node_id)
        if shape in (PropertyClass.ONE_TO_ONE, PropertyClass.ONE_TO_MANY):
            try:
                result = provenance_direct_scan(
                    trace.graph.nodes[node_id].handle,
                    trace.node_inputs_flat(node_id),
                    target,
                    kind,
                    budget,
                    requested_k=k,
                )
                self._last_exhausted = True
                yield from result.misets
                return
            except ShapeViolation:
                trace.shape_overrides[node_id] = PropertyClass.ARBITRARY
        stream = enumerate_misets(
            trace.graph.nodes[node_id].handle,
            trace.node_inputs_flat(node_id),
            target,
            k,
            budget,
        )
        for miset in stream:
            yield miset
        self._last_exhausted = stream.exhausted
        self._last_truncated = stream.truncated


def trace_bounded(trace, node_id, target, bound, budget):
    from .engine import enumerate_bounded

    return enumerate_bounded(
        trace.graph.nodes[node_id].handle,
        trace.node_inputs_flat(node_id),
        target,
        bound,
        budget,
    )


def make_server(
    root: Optional[str | Path] = None,
    addr: tuple[str, int] = DEFAULT_ADDR,
    audit_every: int = AUDIT_EVERY,
) -> tuple[ThreadingHTTPServer, ServiceState]:
    state = ServiceState(root, audit_every)
    handler = type("BoundHandler", (ProberRequestHandler,), {"state": state})
    server = ThreadingHTTPServer(addr, handler)
    server.daemon_threads = True
    return server, state


def serve(root: Optional[str | Path] = None, addr: tuple[str, int] = DEFAULT_ADDR) -> None:
    server, _ = make_server(root, addr)
    host, port = server.server_address[:2]
    print(f"prober service listening on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
