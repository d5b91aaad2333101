"""The HTTP service, end to end, against a temporary data directory.

Persists a small run, starts the service on an ephemeral port, then acts
as a client: list runs, fetch the graph, page through outputs, ask for
provenance as JSON, and finally stream minimal subsets over server-sent
events the way the explorer UI consumes them.
"""

import json
import socket
import tempfile
import threading
import urllib.request

from prober.pipeline import parse_pipeline_config
from prober.records import RecordSet, record
from prober.runtime import default_registry, persist_trace, run_pipeline
from prober.service import make_server

PIPELINE = {
    "nodes": [
        {"id": "src", "kind": "source"},
        {"id": "quorum", "kind": "threshold", "params": {"min_support": 2}},
    ],
    "edges": [{"from": "src", "to": "quorum", "port": 0}],
}


def get(base: str, path: str):
    with urllib.request.urlopen(base + path) as resp:
        return json.loads(resp.read())


with tempfile.TemporaryDirectory() as root:
    graph = parse_pipeline_config(PIPELINE, default_registry())
    trace = run_pipeline(graph, RecordSet([record(x, f"doc {x}") for x in "abc"]))
    persist_trace(trace, root)

    server, _ = make_server(root, ("127.0.0.1", 0))
    threading.Thread(target=server.serve_forever, daemon=True).start()
    host, port = server.server_address[:2]
    base = f"http://{host}:{port}"
    print(f"service on {base}\n")

    runs = get(base, "/runs")["runs"]
    print(f"GET /runs -> {[r['run_id'] for r in runs]}")

    doc = get(base, f"/runs/{trace.run_id}/graph")
    print(f"GET graph -> nodes {[n['id'] for n in doc['nodes']]}, sink {doc['sink']}")

    page = get(base, f"/runs/{trace.run_id}/nodes/quorum/outputs?page=0")
    print(f"GET outputs -> {[r['value'] for r in page['records']]}\n")

    body = json.dumps({"record": "quorum:2", "kind": "imp"}).encode()
    req = urllib.request.Request(
        f"{base}/runs/{trace.run_id}/provenance",
        data=body,
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(req) as resp:
        impacts = json.loads(resp.read())["impacts"]
    print(f"POST provenance kind=imp -> {impacts}\n")

    # The streaming path: one SSE event per minimal subset, then a summary.
    payload = json.dumps({"record": "quorum:2", "kind": "any"}).encode()
    request = (
        f"POST /runs/{trace.run_id}/provenance HTTP/1.1\r\n"
        f"Host: {host}:{port}\r\n"
        "Accept: text/event-stream\r\n"
        "Content-Type: application/json\r\n"
        f"Content-Length: {len(payload)}\r\n"
        "Connection: close\r\n\r\n"
    ).encode() + payload
    sock = socket.create_connection((host, port))
    sock.sendall(request)
    raw = b""
    while chunk := sock.recv(4096):
        raw += chunk
    sock.close()

    print("SSE stream:")
    stream = raw.split(b"\r\n\r\n", 1)[1]
    for frame in stream.split(b"\n\n"):
        if frame:
            print("  " + frame.decode().replace("\n", "  |  "))

    server.shutdown()
    server.server_close()
