import type { StreamRecord } from "./types.js";

// SSE parsing over fetch streaming rather than EventSource: node has no
// global EventSource for the test runner, and fetch gives us full control
// over the since_seq query on every reconnect.

export interface SseEvent {
  id: string;
  event: string;
  data: string;
}

export async function* parseSse(stream: ReadableStream<Uint8Array>): AsyncGenerator<SseEvent> {
  const decoder = new TextDecoder();
  const reader = stream.getReader();
  let buffer = "";
  try {
    while (true) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let cut: number;
      while ((cut = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, cut);
        buffer = buffer.slice(cut + 2);
        const evt: SseEvent = { id: "", event: "message", data: "" };
        for (const line of frame.split("\n")) {
          if (line.startsWith("id: ")) evt.id = line.slice(4);
          else if (line.startsWith("event: ")) evt.event = line.slice(7);
          else if (line.startsWith("data: ")) evt.data += line.slice(6);
          // lines starting with ":" are keepalive comments, skipped
        }
        if (evt.data) yield evt;
      }
    }
  } finally {
    reader.releaseLock();
  }
}

export interface StreamAudit {
  /** records handed to onRecord */
  delivered: number;
  /** redelivered seqs dropped on reconnect overlap */
  duplicates: number;
  /** jumps in the seq chain; the log is contiguous, so this must stay 0 */
  gaps: number;
}

export type StreamStatus = "connecting" | "live" | "closed";

export interface LiveStreamOptions {
  sinceSeq?: number;
  onRecord: (record: StreamRecord) => void;
  onStatus?: (status: StreamStatus) => void;
  retryMs?: number;
  token?: string;
}

/**
 * Follows /stream and resumes from the last applied seq after every drop.
 * Records re-sent across a reconnect are counted and skipped, so downstream
 * state sees each seq exactly once, in order.
 */
export class LiveStream {
  readonly audit: StreamAudit = { delivered: 0, duplicates: 0, gaps: 0 };
  private lastSeq: number;
  private controller: AbortController | null = null;
  private closed = false;

  constructor(
    private baseUrl: string,
    private options: LiveStreamOptions,
  ) {
    this.lastSeq = options.sinceSeq ?? 0;
  }

  get seq(): number {
    return this.lastSeq;
  }

  async run(): Promise<void> {
    while (!this.closed) {
      this.options.onStatus?.("connecting");
      this.controller = new AbortController();
      try {
        const headers: Record<string, string> = { accept: "text/event-stream" };
        if (this.options.token) headers.authorization = `Bearer ${this.options.token}`;
        const res = await fetch(`${this.baseUrl}/stream?since_seq=${this.lastSeq}&follow=1`, {
          headers,
          signal: this.controller.signal,
        });
        if (!res.ok || !res.body) throw new Error(`stream returned ${res.status}`);
        this.options.onStatus?.("live");
        for await (const evt of parseSse(res.body)) {
          const record = JSON.parse(evt.data) as StreamRecord;
          if (record.seq <= this.lastSeq) {
            this.audit.duplicates += 1;
            continue;
          }
          if (this.lastSeq > 0 && record.seq > this.lastSeq + 1) this.audit.gaps += 1;
          this.lastSeq = record.seq;
          this.audit.delivered += 1;
          this.options.onRecord(record);
        }
      } catch {
        // fall through to retry; abort on close lands here too
      }
      if (this.closed) break;
      await new Promise((resolve) => setTimeout(resolve, this.options.retryMs ?? 500));
    }
    this.options.onStatus?.("closed");
  }

  close(): void {
    this.closed = true;
    this.controller?.abort();
  }
}
