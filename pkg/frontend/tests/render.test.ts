import { describe, expect, it } from "vitest";

import { ServiceClient } from "../src/client.js";
import { Explorer } from "../src/explorer.js";
import { ProvenancePanel } from "../src/panel.js";
import {
  escapeHtml,
  renderBreadcrumb,
  renderGraph,
  renderPanel,
  renderRecordTable,
} from "../src/render.js";
import { GRAPH, MockService, RUN_ID, tick } from "./mockService.js";

function countMatches(html: string, re: RegExp): number {
  return (html.match(re) ?? []).length;
}

describe("renderPanel", () => {
  async function panelWith(events: string[][], donePayload: { exhausted: boolean; truncated: boolean } | null) {
    const mock = new MockService();
    const panel = new ProvenancePanel(new ServiceClient("http://x", mock.fetchImpl));
    panel.request({ runId: RUN_ID, nodeId: "assemble", record: "0:addr1" }, { budget: 50 });
    await tick();
    for (const m of events) mock.streams[0].emit("miset", m);
    if (donePayload) {
      mock.streams[0].emit("done", {
        ...donePayload,
        budgetSpent: { executions: 9, cached_hits: 0, records_fetched: 3, virtual_executions: 0 },
      });
      mock.streams[0].end();
    }
    await tick();
    return panel;
  }

  it("renders one table row per streamed event", async () => {
    const panel = await panelWith([["0:a", "0:b"], ["0:c"], ["0:d"]], {
      exhausted: true,
      truncated: false,
    });
    const html = renderPanel(panel);
    expect(countMatches(html, /class="miset"/g)).toBe(3);
    expect(html).toContain(">exhausted<");
    expect(html).not.toContain("raise budget");
  });

  it("shows the raise-budget control only after a truncated done", async () => {
    const panel = await panelWith([["0:a"]], { exhausted: false, truncated: true });
    const html = renderPanel(panel);
    expect(html).toContain(">budget exhausted<");
    expect(html).toContain('data-action="raise-budget"');
    expect(html).toContain("9 / 50 executions");
  });

  it("offers cancel while streaming and reconnect after a drop", async () => {
    const mock = new MockService();
    const panel = new ProvenancePanel(new ServiceClient("http://x", mock.fetchImpl));
    panel.request({ runId: RUN_ID, nodeId: "assemble", record: "0:addr1" });
    await tick();
    expect(renderPanel(panel)).toContain('data-action="cancel-stream"');

    mock.streams[0].emit("miset", ["0:a"]);
    mock.streams[0].drop();
    await tick();
    const html = renderPanel(panel);
    expect(html).toContain(">connection lost<");
    expect(html).toContain('data-action="reconnect"');
    expect(countMatches(html, /class="miset"/g)).toBe(1); // partial rows survive
  });

  it("escapes member record text", async () => {
    const panel = await panelWith([["0:<script>alert(1)</script>"]], null);
    const html = renderPanel(panel);
    expect(html).not.toContain("<script>alert(1)");
    expect(html).toContain("&lt;script&gt;");
  });

  it("renders a terminal notice instead of rows", async () => {
    const mock = new MockService();
    const panel = new ProvenancePanel(new ServiceClient("http://x", mock.fetchImpl));
    panel.showNotice("source input: no further provenance");
    expect(renderPanel(panel)).toContain("source input: no further provenance");
    expect(renderPanel(panel)).not.toContain("misets");
  });
});

describe("renderRecordTable and renderGraph", () => {
  it("marks selected and highlighted records", () => {
    const page = {
      run_id: RUN_ID,
      node_id: "segment",
      page: 0,
      page_size: 50,
      total: 2,
      has_more: false,
      records: [
        { id: "0:seg1", value: "12 Foo St", digest: "a".repeat(64) },
        { id: "1:seg2", value: "Springtown", digest: "b".repeat(64) },
      ],
    };
    const html = renderRecordTable(page, "0:seg1", new Set(["1:seg2"]));
    expect(html).toContain('class="selected"');
    expect(html).toContain('class="member"');
    expect(html).toContain("node segment: 2 records");
  });

  it("lays the graph out source to sink", () => {
    const html = renderGraph(GRAPH, "segment");
    const order = ["load", "segment", "assemble"].map((id) => html.indexOf(`data-node="${id}"`));
    expect(order[0]).toBeGreaterThanOrEqual(0);
    expect(order[0]).toBeLessThan(order[1]);
    expect(order[1]).toBeLessThan(order[2]);
    expect(html).toContain("(source)");
    expect(html).toContain("(sink)");
  });
});

describe("renderBreadcrumb", () => {
  it("shows the trail and a back control once hops were taken", async () => {
    const mock = new MockService();
    const explorer = new Explorer(new ServiceClient("http://x", mock.fetchImpl));
    await explorer.loadRuns();
    await explorer.selectRun(RUN_ID);
    explorer.selectRecord("0:addr1");
    explorer.inspect();
    await tick();
    expect(renderBreadcrumb(explorer)).not.toContain('data-action="back"');

    mock.streams[0].emit("miset", ["1:seg2"]);
    await tick();
    explorer.drillThrough("1:seg2");
    await tick();
    const html = renderBreadcrumb(explorer);
    expect(html).toContain("assemble:0:addr1");
    expect(html).toContain("segment:1:seg2");
    expect(html).toContain('data-action="back"');
  });
});

describe("escapeHtml", () => {
  it("escapes the four risky characters", () => {
    expect(escapeHtml('<a href="x">&</a>')).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
  });
});
