/**
 * @fileoverview HTML renderers for the three explorer panes.
 *
 * Pure string builders so they can be asserted on without a DOM. Interactive
 * elements carry data-action attributes; main.ts wires them via delegation.
 */

import { RAISE_BUDGET_LABEL, RECONNECT_LABEL } from "./badges.js";
import type { Explorer } from "./explorer.js";
import type { ProvenancePanel } from "./panel.js";
import type { OutputsPage, RunGraph, RunSummary } from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderRunList(runs: RunSummary[], selected: string | null): string {
  if (runs.length === 0) return "<p class='empty'>no runs recorded</p>";
  const items = runs.map((r) => {
    const cls = r.run_id === selected ? "run selected" : "run";
    return (
      `<li class="${cls}" data-action="select-run" data-run="${escapeHtml(r.run_id)}">` +
      `<code>${escapeHtml(r.run_id)}</code> <span class="dim">${escapeHtml(r.created_at)}</span></li>`
    );
  });
  return `<ul class="runs">${items.join("")}</ul>`;
}

/** Pipeline pane: one box per node, laid out source to sink. */
export function renderGraph(graph: RunGraph | null, selected: string | null): string {
  if (!graph) return "<p class='empty'>pick a run</p>";
  const order = topoOrder(graph);
  const boxes = order.map((id) => {
    const node = graph.nodes.find((n) => n.id === id);
    const cls = id === selected ? "node selected" : "node";
    const role = id === graph.source ? " (source)" : id === graph.sink ? " (sink)" : "";
    return (
      `<div class="${cls}" data-action="select-node" data-node="${escapeHtml(id)}">` +
      `<strong>${escapeHtml(id)}</strong>${role}<br>` +
      `<span class="dim">${escapeHtml(node?.kind ?? "?")} / ${escapeHtml(node?.shape ?? "?")}` +
      ` / ${node?.output_count ?? 0} records</span></div>`
    );
  });
  return `<div class="graph">${boxes.join('<span class="arrow">&gt;</span>')}</div>`;
}

function topoOrder(graph: RunGraph): string[] {
  const order: string[] = [graph.source];
  const seen = new Set(order);
  while (order.length < graph.nodes.length) {
    const next = graph.edges.find((e) => seen.has(e.from) && !seen.has(e.to));
    if (!next) break;
    order.push(next.to);
    seen.add(next.to);
  }
  for (const n of graph.nodes) if (!seen.has(n.id)) order.push(n.id);
  return order;
}

export function renderRecordTable(
  page: OutputsPage | null,
  selected: string | null,
  highlight: Set<string>,
): string {
  if (!page) return "<p class='empty'>pick a node</p>";
  const rows = page.records.map((r) => {
    const classes = [
      r.id === selected ? "selected" : "",
      highlight.has(r.id) ? "member" : "",
    ]
      .filter(Boolean)
      .join(" ");
    const value = typeof r.value === "string" ? r.value : JSON.stringify(r.value);
    return (
      `<tr class="${classes}" data-action="select-record" data-record="${escapeHtml(r.id)}">` +
      `<td><code>${escapeHtml(r.id)}</code></td>` +
      `<td>${escapeHtml(value)}</td>` +
      `<td class="dim">${escapeHtml(r.digest.slice(0, 10))}</td></tr>`
    );
  });
  const footer =
    `<p class="dim">node ${escapeHtml(page.node_id)}: ${page.total} records` +
    (page.has_more ? " (more pages)" : "") +
    "</p>";
  return (
    '<table class="records"><thead><tr><th>id</th><th>value</th><th>digest</th></tr></thead>' +
    `<tbody>${rows.join("")}</tbody></table>${footer}`
  );
}

export function renderBreadcrumb(explorer: Explorer): string {
  const trail = explorer.trail();
  if (trail.length === 0) return "";
  const parts = trail.map(
    (f) => `<span class="crumb">${escapeHtml(f.nodeId)}:${escapeHtml(f.recordId)}</span>`,
  );
  const back = trail.length > 1 ? ' <button data-action="back">back</button>' : "";
  return `<nav class="breadcrumb">${parts.join(" &gt; ")}${back}</nav>`;
}

/** Provenance pane: one row per streamed minimal input subset. */
export function renderPanel(panel: ProvenancePanel): string {
  const notice = panel.notice();
  if (notice) return `<p class="notice">${escapeHtml(notice)}</p>`;
  if (!panel.target) return "<p class='empty'>pick a record and inspect it</p>";

  const badge = panel.badge();
  const rows = panel
    .rows()
    .map(
      (m, i) =>
        `<tr class="miset" data-row="${i}">` +
        `<td>${i + 1}</td>` +
        `<td>${m.map((r) => memberChip(r)).join(" ")}</td>` +
        `<td>${m.length}</td></tr>`,
    );
  const meter = panel.meter();
  const width = Math.round(meter.fraction * 100);
  const controls = [
    panel.isStreaming() ? '<button data-action="cancel-stream">cancel</button>' : "",
    panel.canRaiseBudget()
      ? `<button data-action="raise-budget">${RAISE_BUDGET_LABEL}</button>`
      : "",
    panel.canReconnect() ? `<button data-action="reconnect">${RECONNECT_LABEL}</button>` : "",
    '<button data-action="compose-source">compose to source</button>',
  ]
    .filter(Boolean)
    .join(" ");

  return (
    `<div class="panel-head"><span class="badge badge-${badge.replace(/ /g, "-")}">` +
    `${escapeHtml(badge)}</span> ` +
    `<span class="dim">${escapeHtml(panel.kind)} @ ${escapeHtml(panel.target.nodeId)}:` +
    `${escapeHtml(panel.target.record)}</span></div>` +
    `<div class="meter"><div class="meter-fill" style="width:${width}%"></div>` +
    `<span class="dim">${meter.spent} / ${meter.limit} executions</span></div>` +
    '<table class="misets"><thead><tr><th>#</th><th>minimal input subset</th><th>size</th></tr></thead>' +
    `<tbody>${rows.join("")}</tbody></table>` +
    (panel.errorMessage() ? `<p class="error">${escapeHtml(panel.errorMessage() ?? "")}</p>` : "") +
    `<div class="controls">${controls}</div>`
  );
}

function memberChip(recordId: string): string {
  return `<code class="chip" data-action="drill" data-record="${escapeHtml(recordId)}">${escapeHtml(
    recordId,
  )}</code>`;
}

export function renderCompose(explorer: Explorer): string {
  const answer = explorer.lastCompose;
  if (!answer) return "";
  const records = (answer.doc.records ?? []).map((r) => `<code>${escapeHtml(r)}</code>`);
  const misets = (answer.doc.misets ?? []).map(
    (m) => `<span>{${m.map(escapeHtml).join(", ")}}</span>`,
  );
  return (
    `<div class="compose"><span class="badge badge-exactness">${escapeHtml(answer.badge)}</span> ` +
    `<span class="dim">${escapeHtml(answer.doc.kind)} to source</span> ` +
    `${records.join(" ")}${misets.join(" ")}</div>`
  );
}
