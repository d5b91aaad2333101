/**
 * @fileoverview HTTP client for the provenance service.
 *
 * The fetch implementation is injected so component tests can script a mock
 * server; structural types below cover both the real fetch and the mocks.
 */

import { SseParser } from "./sse.js";
import type {
  DonePayload,
  OutputsPage,
  ProvenanceDocument,
  ProvenanceRequest,
  RunGraph,
  RunsDocument,
  RunSummary,
  ServiceErrorBody,
} from "./types.js";

export interface RequestInitLike {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}

export interface BodyReaderLike {
  read(): Promise<{ done: boolean; value?: Uint8Array }>;
  cancel(): void | Promise<unknown>;
}

export interface ResponseLike {
  ok: boolean;
  status: number;
  headers: { get(name: string): string | null };
  json(): Promise<unknown>;
  body: { getReader(): BodyReaderLike } | null;
}

export type FetchLike = (url: string, init?: RequestInitLike) => Promise<ResponseLike>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly body: ServiceErrorBody,
  ) {
    super(body.detail ?? body.error);
  }
}

export interface StreamHandlers {
  onMiset(records: string[]): void;
  onDone(done: DonePayload): void;
  onError?(message: string): void;
  /** Fires once when the connection ends; sawDone=false means it was lost. */
  onClose?(sawDone: boolean): void;
}

export interface StreamHandle {
  cancel(): void;
  /** Resolves when the connection has fully closed, however it ended. */
  closed: Promise<void>;
}

export class ServiceClient {
  private readonly base: string;

  constructor(
    baseUrl: string,
    private readonly fetchImpl: FetchLike,
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  async listRuns(): Promise<RunSummary[]> {
    const doc = (await this.getJson("/runs")) as RunsDocument;
    return doc.runs;
  }

  async graph(runId: string): Promise<RunGraph> {
    return (await this.getJson(`/runs/${runId}/graph`)) as RunGraph;
  }

  async outputs(runId: string, nodeId: string, page = 0, pageSize = 50): Promise<OutputsPage> {
    const q = `?page=${page}&page_size=${pageSize}`;
    return (await this.getJson(`/runs/${runId}/nodes/${nodeId}/outputs${q}`)) as OutputsPage;
  }

  /** One-shot provenance request; used for chain composition answers. */
  async provenance(runId: string, req: ProvenanceRequest): Promise<ProvenanceDocument> {
    const resp = await this.fetchImpl(`${this.base}/runs/${runId}/provenance`, {
      method: "POST",
      headers: { "Content-Type": "application/json", Accept: "application/json" },
      body: JSON.stringify(req),
    });
    return (await this.checked(resp)) as ProvenanceDocument;
  }

  /** Subscribe to a provenance stream; events are dispatched as they arrive. */
  streamProvenance(runId: string, req: ProvenanceRequest, handlers: StreamHandlers): StreamHandle {
    const conn = new StreamConnection(handlers);
    conn.closed = this.openStream(runId, req, conn);
    return conn;
  }

  private async openStream(
    runId: string,
    req: ProvenanceRequest,
    conn: StreamConnection,
  ): Promise<void> {
    let resp: ResponseLike;
    try {
      resp = await this.fetchImpl(`${this.base}/runs/${runId}/provenance`, {
        method: "POST",
        headers: { "Content-Type": "application/json", Accept: "text/event-stream" },
        body: JSON.stringify(req),
      });
    } catch {
      conn.finish(false);
      return;
    }
    const type = resp.headers.get("Content-Type") ?? "";
    if (!resp.ok || !type.includes("text/event-stream") || resp.body === null) {
      const body = (await resp.json().catch(() => ({ error: `http ${resp.status}` }))) as ServiceErrorBody;
      conn.fail(body.error ?? `http ${resp.status}`);
      return;
    }
    await conn.pump(resp.body.getReader());
  }

  private async getJson(path: string): Promise<unknown> {
    const resp = await this.fetchImpl(this.base + path, {
      headers: { Accept: "application/json" },
    });
    return this.checked(resp);
  }

  private async checked(resp: ResponseLike): Promise<unknown> {
    if (resp.ok) return resp.json();
    const body = (await resp.json().catch(() => ({ error: `http ${resp.status}` }))) as ServiceErrorBody;
    throw new ServiceError(resp.status, body);
  }
}

class StreamConnection implements StreamHandle {
  closed: Promise<void> = Promise.resolve();
  private cancelled = false;
  private ended = false;
  private sawDone = false;
  private reader: BodyReaderLike | null = null;

  constructor(private readonly handlers: StreamHandlers) {}

  cancel(): void {
    if (this.cancelled || this.ended) return;
    this.cancelled = true;
    if (this.reader) void Promise.resolve(this.reader.cancel()).catch(() => undefined);
  }

  async pump(reader: BodyReaderLike): Promise<void> {
    this.reader = reader;
    if (this.cancelled) {
      void Promise.resolve(reader.cancel()).catch(() => undefined);
      return;
    }
    const parser = new SseParser();
    const decoder = new TextDecoder();
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done || this.cancelled) break;
        for (const frame of parser.feed(decoder.decode(value, { stream: true }))) {
          if (this.cancelled) break;
          this.dispatch(frame.event, frame.data);
        }
      }
    } catch {
      // network failure mid-stream; fall through to the close signal
    }
    this.finish(this.sawDone);
  }

  fail(message: string): void {
    if (this.ended) return;
    this.handlers.onError?.(message);
    this.finish(true); // a refused request is not a lost connection
  }

  finish(sawDone: boolean): void {
    if (this.ended) return;
    this.ended = true;
    if (!this.cancelled) this.handlers.onClose?.(sawDone);
  }

  private dispatch(event: string, data: string): void {
    let payload: unknown;
    try {
      payload = JSON.parse(data);
    } catch {
      return;
    }
    if (event === "miset" && Array.isArray(payload)) {
      this.handlers.onMiset(payload.map(String));
    } else if (event === "done") {
      this.sawDone = true;
      this.handlers.onDone(payload as DonePayload);
    } else if (event === "error") {
      const body = payload as ServiceErrorBody;
      this.handlers.onError?.(body.error ?? String(data));
    }
  }
}
