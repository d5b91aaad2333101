/**
 * @fileoverview Provenance panel state.
 *
 * One panel owns at most one live stream; issuing a new request cancels the
 * previous one. Rows are append-only for the lifetime of a request, and a
 * reconnect after connection loss keeps the rows already received.
 */

import type { ServiceClient, StreamHandle } from "./client.js";
import { panelBadge, type PanelBadge } from "./badges.js";
import type { DonePayload, ProvenanceKind, ProvenanceRequest } from "./types.js";

export interface PanelTarget {
  runId: string;
  nodeId: string;
  record: string;
}

export interface PanelOptions {
  kind?: Extract<ProvenanceKind, "any" | "all">;
  k?: number;
  bound?: number;
  budget?: number;
}

export interface BudgetMeter {
  spent: number;
  limit: number;
  fraction: number;
}

export const DEFAULT_PANEL_BUDGET = 10000;

export class ProvenancePanel {
  private misets: string[][] = [];
  private handle: StreamHandle | null = null;
  private token = 0;
  private streaming = false;
  private cancelled = false;
  private lostConnection = false;
  private done: DonePayload | null = null;
  private failure: string | null = null;
  private noticeText: string | null = null;

  target: PanelTarget | null = null;
  kind: "any" | "all" = "any";
  k: number | undefined;
  bound: number | undefined;
  requestedBudget = DEFAULT_PANEL_BUDGET;

  constructor(
    private readonly client: ServiceClient,
    private readonly onChange: () => void = () => undefined,
  ) {}

  /** Point the panel at a record and open a fresh stream. */
  request(target: PanelTarget, opts: PanelOptions = {}, preserveRows = false): StreamHandle {
    this.handle?.cancel();
    this.token += 1;
    const token = this.token;

    this.target = target;
    if (opts.kind) this.kind = opts.kind;
    this.k = opts.kind ? opts.k : this.k;
    this.bound = opts.kind ? opts.bound : this.bound;
    if (opts.budget !== undefined) this.requestedBudget = opts.budget;
    if (!preserveRows) this.misets = [];
    this.streaming = true;
    this.cancelled = false;
    this.lostConnection = false;
    this.done = null;
    this.failure = null;
    this.noticeText = null;

    const req: ProvenanceRequest = {
      node_id: target.nodeId,
      record: target.record,
      kind: this.kind,
      budget: this.requestedBudget,
    };
    if (this.kind === "any" && this.k !== undefined) req.k = this.k;
    if (this.kind === "all" && this.bound !== undefined) req.bound = this.bound;

    this.handle = this.client.streamProvenance(target.runId, req, {
      onMiset: (records) => {
        if (token !== this.token) return;
        this.misets.push(records);
        this.onChange();
      },
      onDone: (done) => {
        if (token !== this.token) return;
        this.done = done;
        this.streaming = false;
        this.onChange();
      },
      onError: (message) => {
        if (token !== this.token) return;
        this.failure = message;
        this.streaming = false;
        this.onChange();
      },
      onClose: (sawDone) => {
        if (token !== this.token) return;
        this.streaming = false;
        if (!sawDone && this.failure === null) this.lostConnection = true;
        this.onChange();
      },
    });
    this.onChange();
    return this.handle;
  }

  /** Close the live stream, keeping the rows received so far. */
  cancel(): void {
    if (!this.handle || !this.streaming) return;
    this.cancelled = true;
    this.streaming = false;
    this.handle.cancel();
    this.onChange();
  }

  /** Replace the panel content with a terminal notice (no request issued). */
  showNotice(text: string): void {
    this.handle?.cancel();
    this.token += 1;
    this.misets = [];
    this.streaming = false;
    this.cancelled = false;
    this.lostConnection = false;
    this.done = null;
    this.failure = null;
    this.noticeText = text;
    this.onChange();
  }

  canRaiseBudget(): boolean {
    return this.done !== null && this.done.truncated && this.target !== null;
  }

  /** Re-run the truncated request with twice the budget. */
  raiseBudget(): void {
    if (!this.canRaiseBudget() || !this.target) return;
    this.request(this.target, { budget: this.requestedBudget * 2 });
  }

  canReconnect(): boolean {
    return this.lostConnection && this.target !== null;
  }

  /** Retry after connection loss, preserving the partial rows. */
  reconnect(): void {
    if (!this.canReconnect() || !this.target) return;
    this.request(this.target, {}, true);
  }

  badge(): PanelBadge {
    return panelBadge({
      streaming: this.streaming,
      cancelled: this.cancelled,
      failed: this.failure !== null,
      lostConnection: this.lostConnection,
      done: this.done,
    });
  }

  rows(): readonly string[][] {
    return this.misets;
  }

  /** Total member records across rows; duplicates count, nothing is merged. */
  recordCount(): number {
    return this.misets.reduce((n, m) => n + m.length, 0);
  }

  /** Distinct member records, for highlighting in the upstream record table. */
  memberRecords(): Set<string> {
    const out = new Set<string>();
    for (const m of this.misets) for (const r of m) out.add(r);
    return out;
  }

  meter(): BudgetMeter {
    const limit = this.requestedBudget;
    const executions = this.done ? this.done.budgetSpent.executions : 0;
    const spent = Math.min(executions, limit);
    return { spent, limit, fraction: limit > 0 ? spent / limit : 0 };
  }

  lastDone(): DonePayload | null {
    return this.done;
  }

  errorMessage(): string | null {
    return this.failure;
  }

  notice(): string | null {
    return this.noticeText;
  }

  isStreaming(): boolean {
    return this.streaming;
  }
}
