/**
 * @fileoverview Explorer session state: selected run, graph, record table,
 * provenance panel, and the drill-through navigation stack.
 *
 * Drill-through walks provenance upstream: a member record shown in a panel
 * row is an output of the node feeding the panel's node, so clicking it
 * re-targets the panel one hop closer to the source. The stack records every
 * hop taken; its depth is the number of hops.
 */

import { exactnessBadge, SOURCE_NOTICE, type ExactnessBadge } from "./badges.js";
import type { ServiceClient } from "./client.js";
import { ProvenancePanel, type PanelOptions } from "./panel.js";
import type {
  OutputRecord,
  OutputsPage,
  ProvenanceDocument,
  RunGraph,
  RunSummary,
} from "./types.js";

export interface NavFrame {
  nodeId: string;
  recordId: string;
}

export interface ComposeAnswer {
  doc: ProvenanceDocument;
  badge: ExactnessBadge;
}

export type DrillOutcome = "retargeted" | "source-notice";

export class Explorer {
  runs: RunSummary[] = [];
  graph: RunGraph | null = null;
  selectedRun: string | null = null;
  selectedNode: string | null = null;
  page: OutputsPage | null = null;
  selectedRecord: OutputRecord | null = null;
  lastCompose: ComposeAnswer | null = null;

  readonly panel: ProvenancePanel;
  private stack: NavFrame[] = [];
  private current: NavFrame | null = null;

  constructor(
    private readonly client: ServiceClient,
    private readonly onChange: () => void = () => undefined,
  ) {
    this.panel = new ProvenancePanel(client, onChange);
  }

  async loadRuns(): Promise<void> {
    this.runs = await this.client.listRuns();
    this.onChange();
  }

  /** Select a run; the record table starts at the sink, where debugging starts. */
  async selectRun(runId: string): Promise<void> {
    this.graph = await this.client.graph(runId);
    this.selectedRun = runId;
    this.stack = [];
    this.current = null;
    this.lastCompose = null;
    this.onChange();
    await this.selectNode(this.graph.sink);
  }

  async selectNode(nodeId: string, page = 0): Promise<void> {
    if (!this.selectedRun) throw new Error("no run selected");
    this.page = await this.client.outputs(this.selectedRun, nodeId, page);
    this.selectedNode = nodeId;
    this.selectedRecord = null;
    this.onChange();
  }

  selectRecord(recordId: string): void {
    const hit = this.page?.records.find((r) => r.id === recordId);
    if (!hit) throw new Error(`record ${recordId} is not on the current page`);
    this.selectedRecord = hit;
    this.onChange();
  }

  /** Start a fresh provenance request at the selected record, clearing hops. */
  inspect(opts: PanelOptions = {}): void {
    if (!this.selectedRun || !this.selectedNode || !this.selectedRecord) {
      throw new Error("select a run, node, and record first");
    }
    this.stack = [];
    this.current = { nodeId: this.selectedNode, recordId: this.selectedRecord.id };
    this.lastCompose = null;
    this.panel.request(
      { runId: this.selectedRun, nodeId: this.selectedNode, record: this.selectedRecord.id },
      opts,
    );
  }

  /** Producer of a node's inputs, or null when the node is the source. */
  upstreamOf(nodeId: string): string | null {
    if (!this.graph) return null;
    const edge = this.graph.edges.find((e) => e.to === nodeId && e.port === 0);
    return edge ? edge.from : null;
  }

  /**
   * Follow a member record one hop upstream. Records produced by the source
   * end the walk with a terminal notice instead of a request.
   */
  drillThrough(memberId: string): DrillOutcome {
    if (!this.graph || !this.current || !this.selectedRun) {
      throw new Error("no active provenance target");
    }
    const up = this.upstreamOf(this.current.nodeId);
    if (up === null) throw new Error(`${this.current.nodeId} has no upstream`);
    this.stack.push(this.current);
    this.current = { nodeId: up, recordId: memberId };
    if (up === this.graph.source) {
      this.panel.showNotice(SOURCE_NOTICE);
      this.onChange();
      return "source-notice";
    }
    this.panel.request({ runId: this.selectedRun, nodeId: up, record: memberId });
    this.onChange();
    return "retargeted";
  }

  /** Pop one hop and re-open the stream for the restored target. */
  back(): boolean {
    const frame = this.stack.pop();
    if (!frame || !this.selectedRun) return false;
    this.current = frame;
    this.panel.request({
      runId: this.selectedRun,
      nodeId: frame.nodeId,
      record: frame.recordId,
    });
    this.onChange();
    return true;
  }

  /** Origin target first, current target last. */
  trail(): NavFrame[] {
    return this.current ? [...this.stack, this.current] : [];
  }

  hops(): number {
    return this.stack.length;
  }

  breadcrumb(): string {
    return this.trail()
      .map((f) => `${f.nodeId}:${f.recordId}`)
      .join(" > ");
  }

  highlightFor(nodeId: string): Set<string> {
    const target = this.panel.target;
    if (!target || this.upstreamOf(target.nodeId) !== nodeId) return new Set();
    return this.panel.memberRecords();
  }

  /**
   * Ask the service to compose provenance from the origin target through to
   * the source, and keep the answer with its exactness badge.
   */
  async composeToSource(kind: "uni" | "int" | "all" = "uni"): Promise<ComposeAnswer> {
    const origin = this.trail()[0];
    if (!origin || !this.selectedRun) throw new Error("no active provenance target");
    const doc = await this.client.provenance(this.selectedRun, {
      node_id: origin.nodeId,
      record: origin.recordId,
      kind,
      chain: true,
      mode: kind === "all" ? "exact" : "bounds",
      budget: this.panel.requestedBudget,
    });
    this.lastCompose = { doc, badge: exactnessBadge(doc.relation, doc.exact) };
    this.onChange();
    return this.lastCompose;
  }
}
