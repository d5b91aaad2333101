/**
 * @fileoverview Badge text and the pure functions that pick it.
 *
 * Badges only restate what the service reported (plus local cancel state);
 * nothing here may promote a bound to an exact answer.
 */

import type { BoundRelation, DonePayload } from "./types.js";

export type PanelBadge =
  | "idle"
  | "streaming"
  | "exhausted"
  | "budget exhausted"
  | "cancelled"
  | "connection lost"
  | "error";

export interface PanelSignals {
  streaming: boolean;
  cancelled: boolean;
  failed: boolean;
  lostConnection: boolean;
  done: DonePayload | null;
}

/** Status badge for a provenance panel. Local cancel wins over everything. */
export function panelBadge(s: PanelSignals): PanelBadge {
  if (s.cancelled) return "cancelled";
  if (s.failed) return "error";
  if (s.done) return s.done.truncated ? "budget exhausted" : "exhausted";
  if (s.lostConnection) return "connection lost";
  if (s.streaming) return "streaming";
  return "idle";
}

export type ExactnessBadge = "Exact" | "Superset of truth" | "Subset of truth" | "No guarantee";

/**
 * Exactness label for a composition answer. `relation` (bounds mode) takes
 * priority; otherwise only an explicit exact=true earns the Exact badge.
 */
export function exactnessBadge(relation: BoundRelation | undefined, exact: boolean | undefined): ExactnessBadge {
  if (relation === "exact") return "Exact";
  if (relation === "superset_of_truth") return "Superset of truth";
  if (relation === "subset_of_truth") return "Subset of truth";
  if (relation === undefined && exact === true) return "Exact";
  return "No guarantee";
}

export const SOURCE_NOTICE = "source input: no further provenance";
export const RAISE_BUDGET_LABEL = "raise budget and retry";
export const RECONNECT_LABEL = "reconnect";
