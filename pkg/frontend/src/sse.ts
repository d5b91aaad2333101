/**
 * @fileoverview Incremental text/event-stream parser.
 *
 * The service streams provenance over POST responses, which EventSource
 * cannot consume, so frames are parsed by hand from the response body.
 * Chunk boundaries are arbitrary: a frame may arrive split anywhere.
 */

export interface SseFrame {
  event: string;
  data: string;
}

export class SseParser {
  private buf = "";

  /** Feed one decoded chunk; returns the frames it completed, in order. */
  feed(chunk: string): SseFrame[] {
    this.buf += chunk;
    const frames: SseFrame[] = [];
    for (;;) {
      const cut = this.buf.indexOf("\n\n");
      if (cut < 0) break;
      const block = this.buf.slice(0, cut);
      this.buf = this.buf.slice(cut + 2);
      const frame = parseBlock(block);
      if (frame) frames.push(frame);
    }
    return frames;
  }

  /** True when a partial frame is still buffered (connection died mid-frame). */
  hasPartial(): boolean {
    return this.buf.trim().length > 0;
  }
}

function parseBlock(block: string): SseFrame | null {
  let event = "message";
  const data: string[] = [];
  for (const raw of block.split("\n")) {
    const line = raw.endsWith("\r") ? raw.slice(0, -1) : raw;
    if (line === "" || line.startsWith(":")) continue;
    const sep = line.indexOf(":");
    const field = sep < 0 ? line : line.slice(0, sep);
    let value = sep < 0 ? "" : line.slice(sep + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "event") event = value;
    else if (field === "data") data.push(value);
  }
  if (data.length === 0) return null;
  return { event, data: data.join("\n") };
}
