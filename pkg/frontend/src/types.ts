/**
 * @fileoverview Wire types for the provenance service.
 *
 * Field names mirror the JSON documents the service emits verbatim, so a
 * parsed response body can be used as-is without a mapping layer.
 */

export interface RunSummary {
  run_id: string;
  created_at: string;
  nodes: string[];
}

export interface RunsDocument {
  runs: RunSummary[];
}

export interface GraphNode {
  id: string;
  kind: string;
  shape: string;
  params: Record<string, unknown>;
  output_count: number;
}

export interface GraphEdge {
  from: string;
  to: string;
  port: number;
}

export interface RunGraph {
  run_id: string;
  nodes: GraphNode[];
  edges: GraphEdge[];
  source: string;
  sink: string;
}

export interface OutputRecord {
  id: string;
  value: unknown;
  digest: string;
}

export interface OutputsPage {
  run_id: string;
  node_id: string;
  page: number;
  page_size: number;
  total: number;
  has_more: boolean;
  records: OutputRecord[];
}

export type ProvenanceKind = "all" | "any" | "uni" | "int" | "imp";

/** Body of POST /runs/{id}/provenance. Omitted fields take server defaults. */
export interface ProvenanceRequest {
  node_id?: string;
  record: string;
  kind?: ProvenanceKind;
  k?: number;
  bound?: number;
  chain?: boolean;
  mode?: "exact" | "bounds";
  budget?: number;
}

export interface BudgetSpent {
  executions: number;
  cached_hits: number;
  records_fetched: number;
  virtual_executions: number;
}

/** Payload of the final `done` event on a provenance stream. */
export interface DonePayload {
  exhausted: boolean;
  truncated: boolean;
  budgetSpent: BudgetSpent;
  error?: string;
}

export type BoundRelation = "exact" | "superset_of_truth" | "subset_of_truth";

/**
 * Non-streamed provenance result. Exactly one of misets/records/impacts is
 * present depending on kind; `relation` appears only on bounds-mode chain
 * answers, `exact`/`truncated` on everything else.
 */
export interface ProvenanceDocument {
  kind: string;
  run_id: string;
  node_id: string;
  target_digest: string;
  target_id: string;
  chain: boolean;
  budget_spent: BudgetSpent;
  misets?: string[][];
  records?: string[];
  impacts?: { id: string; count: number }[];
  exact?: boolean;
  truncated?: boolean;
  relation?: BoundRelation;
  requested_k?: number;
}

export interface ServiceErrorBody {
  error: string;
  detail?: string;
  budget_spent?: BudgetSpent;
}
