/**
 * @fileoverview Browser entry point: wires the explorer state to the DOM.
 *
 * The page is re-rendered from state on every change; clicks are handled by
 * delegation on data-action attributes so the rendered HTML stays inert.
 */

import { ServiceClient, type FetchLike } from "./client.js";
import { Explorer } from "./explorer.js";
import {
  renderBreadcrumb,
  renderCompose,
  renderGraph,
  renderPanel,
  renderRecordTable,
  renderRunList,
} from "./render.js";

function mount(root: Document): void {
  const base = new URLSearchParams(root.location?.search ?? "").get("api") ?? "http://127.0.0.1:7070";
  const client = new ServiceClient(base, fetch.bind(globalThis) as unknown as FetchLike);
  const explorer = new Explorer(client, () => draw());

  const pane = (id: string) => root.getElementById(id) as HTMLElement;

  function draw(): void {
    pane("runs").innerHTML = renderRunList(explorer.runs, explorer.selectedRun);
    pane("graph").innerHTML = renderGraph(explorer.graph, explorer.selectedNode);
    pane("records").innerHTML = renderRecordTable(
      explorer.page,
      explorer.selectedRecord?.id ?? null,
      explorer.selectedNode ? explorer.highlightFor(explorer.selectedNode) : new Set(),
    );
    pane("breadcrumb").innerHTML = renderBreadcrumb(explorer);
    pane("panel").innerHTML = renderPanel(explorer.panel);
    pane("compose").innerHTML = renderCompose(explorer);
  }

  function fail(err: unknown): void {
    pane("status").textContent = err instanceof Error ? err.message : String(err);
  }

  root.addEventListener("click", (ev) => {
    const el = (ev.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
    if (!el) return;
    const action = el.dataset.action;
    try {
      if (action === "select-run") void explorer.selectRun(el.dataset.run ?? "").catch(fail);
      else if (action === "select-node") void explorer.selectNode(el.dataset.node ?? "").catch(fail);
      else if (action === "select-record") explorer.selectRecord(el.dataset.record ?? "");
      else if (action === "inspect") inspect();
      else if (action === "drill") explorer.drillThrough(el.dataset.record ?? "");
      else if (action === "back") explorer.back();
      else if (action === "cancel-stream") explorer.panel.cancel();
      else if (action === "raise-budget") explorer.panel.raiseBudget();
      else if (action === "reconnect") explorer.panel.reconnect();
      else if (action === "compose-source") void explorer.composeToSource().catch(fail);
    } catch (err) {
      fail(err);
    }
  });

  function inspect(): void {
    const kind = (pane("kind") as HTMLSelectElement).value === "all" ? "all" : "any";
    const kRaw = (pane("k") as HTMLInputElement).value;
    const budgetRaw = (pane("budget") as HTMLInputElement).value;
    explorer.inspect({
      kind,
      k: kind === "any" && kRaw ? Number(kRaw) : undefined,
      bound: kind === "all" && kRaw ? Number(kRaw) : undefined,
      budget: budgetRaw ? Number(budgetRaw) : undefined,
    });
  }

  explorer.loadRuns().then(draw, fail);
}

if (typeof document !== "undefined") {
  mount(document);
}
