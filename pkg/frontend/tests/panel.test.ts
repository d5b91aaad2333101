import { describe, expect, it } from "vitest";

import { ServiceClient } from "../src/client.js";
import { ProvenancePanel } from "../src/panel.js";
import type { BudgetSpent } from "../src/types.js";
import { MockService, RUN_ID, tick } from "./mockService.js";

const TARGET = { runId: RUN_ID, nodeId: "assemble", record: "0:addr1" };

function spent(executions: number): BudgetSpent {
  return { executions, cached_hits: 0, records_fetched: 2, virtual_executions: 0 };
}

async function openPanel(opts: Parameters<ProvenancePanel["request"]>[1] = {}) {
  const mock = new MockService();
  const panel = new ProvenancePanel(new ServiceClient("http://x", mock.fetchImpl));
  panel.request(TARGET, opts);
  await tick();
  return { mock, panel, stream: mock.streams[0] };
}

describe("ProvenancePanel streaming", () => {
  it("renders three streamed events as three rows, then the exhausted badge", async () => {
    const { panel, stream } = await openPanel();
    expect(panel.badge()).toBe("streaming");

    stream.emit("miset", ["0:a", "0:b"]);
    await tick();
    expect(panel.rows()).toEqual([["0:a", "0:b"]]);
    expect(panel.badge()).toBe("streaming");

    stream.emit("miset", ["0:a", "0:c"]);
    stream.emit("miset", ["0:b", "0:c"]);
    await tick();
    expect(panel.rows()).toHaveLength(3);

    stream.emit("done", { exhausted: true, truncated: false, budgetSpent: spent(7) });
    stream.end();
    await tick();
    expect(panel.rows()).toHaveLength(3);
    expect(panel.badge()).toBe("exhausted");
  });

  it("counts every member of every event, without deduplication", async () => {
    const { panel, stream } = await openPanel();
    stream.emit("miset", ["0:a", "0:b"]);
    stream.emit("miset", ["0:a", "0:b"]); // duplicate payload still counts
    stream.emit("miset", ["0:c"]);
    stream.emit("done", { exhausted: true, truncated: false, budgetSpent: spent(3) });
    stream.end();
    await tick();
    expect(panel.recordCount()).toBe(5);
    expect([...panel.memberRecords()].sort()).toEqual(["0:a", "0:b", "0:c"]);
  });

  it("keeps rows append-only while a request is live", async () => {
    const { panel, stream } = await openPanel();
    stream.emit("miset", ["0:a"]);
    await tick();
    const first = panel.rows()[0];
    stream.emit("miset", ["0:b"]);
    await tick();
    expect(panel.rows()[0]).toBe(first);
    expect(panel.rows().map((m) => m[0])).toEqual(["0:a", "0:b"]);
    stream.end();
  });

  it("cancel keeps received rows and flips the badge to cancelled", async () => {
    const { panel, stream } = await openPanel();
    stream.emit("miset", ["0:a", "0:b"]);
    await tick();

    panel.cancel();
    await tick();
    expect(stream.cancelled).toBe(true);
    expect(panel.rows()).toEqual([["0:a", "0:b"]]);
    expect(panel.badge()).toBe("cancelled");
  });

  it("truncated done shows the budget-exhausted badge and enables raising", async () => {
    const { mock, panel, stream } = await openPanel({ budget: 40 });
    stream.emit("miset", ["0:a"]);
    stream.emit("done", { exhausted: false, truncated: true, budgetSpent: spent(40) });
    stream.end();
    await tick();
    expect(panel.badge()).toBe("budget exhausted");
    expect(panel.canRaiseBudget()).toBe(true);
    expect(panel.meter()).toEqual({ spent: 40, limit: 40, fraction: 1 });

    panel.raiseBudget();
    await tick();
    expect(mock.streams).toHaveLength(2);
    expect(mock.streams[1].request.body?.budget).toBe(80);
    expect(panel.rows()).toEqual([]); // a fresh request starts a fresh list
    expect(panel.badge()).toBe("streaming");
  });

  it("clamps the budget meter at the requested limit", async () => {
    const { panel, stream } = await openPanel({ budget: 10 });
    stream.emit("done", { exhausted: true, truncated: false, budgetSpent: spent(12) });
    stream.end();
    await tick();
    expect(panel.meter().spent).toBe(10);
    expect(panel.meter().fraction).toBe(1);
  });

  it("connection loss offers reconnect and preserves partial rows across it", async () => {
    const { mock, panel, stream } = await openPanel();
    stream.emit("miset", ["0:a"]);
    stream.emit("miset", ["0:b"]);
    stream.drop(); // body ends without a done event
    await tick();
    expect(panel.badge()).toBe("connection lost");
    expect(panel.canReconnect()).toBe(true);
    expect(panel.rows()).toHaveLength(2);

    panel.reconnect();
    await tick();
    const second = mock.streams[1];
    second.emit("miset", ["0:c"]);
    second.emit("done", { exhausted: true, truncated: false, budgetSpent: spent(9) });
    second.end();
    await tick();
    expect(panel.rows()).toEqual([["0:a"], ["0:b"], ["0:c"]]);
    expect(panel.badge()).toBe("exhausted");
  });

  it("a new request cancels the live stream and ignores its stale events", async () => {
    const { mock, panel, stream } = await openPanel();
    stream.emit("miset", ["0:a"]);
    await tick();

    stream.emit("miset", ["0:stale"]); // enqueued, but not yet delivered
    panel.request({ ...TARGET, record: "0:addr1" }, { kind: "all" });
    await tick();
    expect(stream.cancelled).toBe(true);
    expect(mock.streams).toHaveLength(2);
    expect(mock.streams[1].request.body?.kind).toBe("all");
    expect(panel.rows()).toEqual([]); // the stale event never lands

    mock.streams[1].emit("miset", ["0:fresh"]);
    await tick();
    expect(panel.rows()).toEqual([["0:fresh"]]);
    mock.streams[1].end();
  });

  it("an error event surfaces as the error badge with the message", async () => {
    const { panel, stream } = await openPanel();
    stream.emit("error", { error: "no record 7:ghost" });
    stream.end();
    await tick();
    expect(panel.badge()).toBe("error");
    expect(panel.errorMessage()).toBe("no record 7:ghost");
  });

  it("showNotice clears the panel without issuing any request", async () => {
    const { mock, panel, stream } = await openPanel();
    stream.emit("miset", ["0:a"]);
    await tick();
    panel.showNotice("source input: no further provenance");
    await tick();
    expect(panel.notice()).toBe("source input: no further provenance");
    expect(panel.rows()).toEqual([]);
    expect(panel.badge()).toBe("idle");
    expect(mock.streamRequests()).toHaveLength(1);
  });
});

describe("budget meter before any done event", () => {
  it("reads zero spend while streaming", async () => {
    const { panel, stream } = await openPanel({ budget: 100 });
    stream.emit("miset", ["0:a"]);
    await tick();
    expect(panel.meter()).toEqual({ spent: 0, limit: 100, fraction: 0 });
    stream.end();
  });
});
