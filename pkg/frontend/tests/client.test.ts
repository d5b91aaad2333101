import { describe, expect, it } from "vitest";

import { ServiceClient, ServiceError, type StreamHandlers } from "../src/client.js";
import type { DonePayload } from "../src/types.js";
import { MockService, RUN_ID, tick } from "./mockService.js";

const BASE = "http://127.0.0.1:7070";

function collector() {
  const misets: string[][] = [];
  let done: DonePayload | null = null;
  const errors: string[] = [];
  const closes: boolean[] = [];
  const handlers: StreamHandlers = {
    onMiset: (m) => misets.push(m),
    onDone: (d) => {
      done = d;
    },
    onError: (e) => errors.push(e),
    onClose: (sawDone) => closes.push(sawDone),
  };
  return { misets, errors, closes, handlers, done: () => done };
}

describe("ServiceClient rest calls", () => {
  it("lists runs", async () => {
    const mock = new MockService();
    const client = new ServiceClient(BASE, mock.fetchImpl);
    const runs = await client.listRuns();
    expect(runs).toHaveLength(1);
    expect(runs[0].run_id).toBe(RUN_ID);
    expect(mock.requests[0].url).toBe(`${BASE}/runs`);
  });

  it("fetches the graph and an outputs page", async () => {
    const mock = new MockService();
    const client = new ServiceClient(`${BASE}/`, mock.fetchImpl);
    const graph = await client.graph(RUN_ID);
    expect(graph.source).toBe("load");
    expect(graph.sink).toBe("assemble");
    const page = await client.outputs(RUN_ID, "segment", 0, 10);
    expect(page.records.map((r) => r.id)).toEqual(["0:seg1", "1:seg2", "2:seg3"]);
    expect(mock.requests[0].url).toContain("/runs/run-fixture0001/graph");
    expect(mock.requests[1].url).toContain("/outputs?page=0&page_size=10");
  });

  it("throws ServiceError with the body on a refused request", async () => {
    const mock = new MockService();
    mock.onProvenance = () => ({
      status: 409,
      doc: {
        error: "budget_exhausted",
        detail: "spent 12 executions",
        budget_spent: { executions: 12, cached_hits: 0, records_fetched: 3, virtual_executions: 0 },
      },
    });
    const client = new ServiceClient(BASE, mock.fetchImpl);
    const err = await client
      .provenance(RUN_ID, { record: "0:addr1", chain: true, mode: "bounds" })
      .then(
        () => null,
        (e) => e as ServiceError,
      );
    expect(err).toBeInstanceOf(ServiceError);
    expect(err?.status).toBe(409);
    expect(err?.body.error).toBe("budget_exhausted");
    expect(err?.body.budget_spent?.executions).toBe(12);
  });
});

describe("ServiceClient event streams", () => {
  it("dispatches misets and done in order, then signals a clean close", async () => {
    const mock = new MockService();
    const client = new ServiceClient(BASE, mock.fetchImpl);
    const got = collector();
    client.streamProvenance(RUN_ID, { record: "0:addr1", kind: "any" }, got.handlers);
    await tick();
    const stream = mock.streams[0];
    expect(stream.request.body).toMatchObject({ record: "0:addr1", kind: "any" });
    expect(stream.request.accept).toContain("text/event-stream");

    stream.emit("miset", ["0:seg1", "1:seg2"]);
    stream.emit("miset", ["2:seg3"]);
    await tick();
    expect(got.misets).toEqual([
      ["0:seg1", "1:seg2"],
      ["2:seg3"],
    ]);
    expect(got.done()).toBeNull();

    stream.emit("done", {
      exhausted: true,
      truncated: false,
      budgetSpent: { executions: 5, cached_hits: 1, records_fetched: 4, virtual_executions: 0 },
    });
    stream.end();
    await tick();
    expect(got.done()).toMatchObject({ exhausted: true, truncated: false });
    expect(got.closes).toEqual([true]);
    expect(got.errors).toEqual([]);
  });

  it("parses frames split across chunk boundaries", async () => {
    const mock = new MockService();
    const client = new ServiceClient(BASE, mock.fetchImpl);
    const got = collector();
    client.streamProvenance(RUN_ID, { record: "0:addr1" }, got.handlers);
    await tick();
    const stream = mock.streams[0];
    stream.emitRaw('event: mis');
    await tick();
    stream.emitRaw('et\ndata: ["0:se');
    await tick();
    stream.emitRaw('g1"]\n\n');
    await tick();
    expect(got.misets).toEqual([["0:seg1"]]);
    stream.end();
  });

  it("cancel closes the response body and mutes later events", async () => {
    const mock = new MockService();
    const client = new ServiceClient(BASE, mock.fetchImpl);
    const got = collector();
    const handle = client.streamProvenance(RUN_ID, { record: "0:addr1" }, got.handlers);
    await tick();
    const stream = mock.streams[0];
    stream.emit("miset", ["0:seg1"]);
    await tick();
    expect(got.misets).toHaveLength(1);

    handle.cancel();
    await tick();
    expect(stream.cancelled).toBe(true);
    expect(got.closes).toEqual([]); // a local cancel is not a connection loss
    expect(got.misets).toHaveLength(1);
  });

  it("signals connection loss when the body ends without done", async () => {
    const mock = new MockService();
    const client = new ServiceClient(BASE, mock.fetchImpl);
    const got = collector();
    client.streamProvenance(RUN_ID, { record: "0:addr1" }, got.handlers);
    await tick();
    const stream = mock.streams[0];
    stream.emit("miset", ["0:seg1"]);
    stream.drop();
    await tick();
    expect(got.misets).toEqual([["0:seg1"]]);
    expect(got.closes).toEqual([false]);
  });

  it("routes error events to onError", async () => {
    const mock = new MockService();
    const client = new ServiceClient(BASE, mock.fetchImpl);
    const got = collector();
    client.streamProvenance(RUN_ID, { record: "9:nope" }, got.handlers);
    await tick();
    const stream = mock.streams[0];
    stream.emit("error", { error: "no record 9:nope" });
    stream.end();
    await tick();
    expect(got.errors).toEqual(["no record 9:nope"]);
  });

  it("reports a refused stream request as an error, not a lost connection", async () => {
    const mock = new MockService();
    const client = new ServiceClient(BASE, mock.fetchImpl);
    const got = collector();
    client.streamProvenance("run-absent", { record: "0:addr1" }, got.handlers);
    await tick();
    expect(got.errors).toEqual(["no run run-absent"]);
    expect(got.closes).toEqual([true]);
  });
});
