/**
 * Server-sent event stream client with resume and dedup.
 *
 * Built on fetch streaming rather than EventSource so the bearer token can
 * ride in a header and reconnects stay under our control. On every reconnect
 * the last seen event id goes out as Last-Event-ID, the server replays
 * everything after that coordinate, and anything at or before it is dropped
 * here, so consumers observe each event exactly once and in order.
 */

import type { EventRecord } from "./types.js";

export type StreamStatus = "connecting" | "live" | "reconnecting" | "stopped";

export interface StreamOptions {
  url: string;
  token: string;
  /** Resume cursor, exclusive: only events after this coordinate are emitted. */
  lastEventId?: string;
  onRecord: (record: EventRecord) => void;
  onStatus?: (status: StreamStatus) => void;
  retryMs?: number;
  fetcher?: typeof fetch;
}

/** Parse an event id "height-offset-index" into a comparable triple. */
export function parseEventId(id: string): [number, number, number] | null {
  const parts = id.trim().split("-");
  if (parts.length !== 3) return null;
  const nums = parts.map((p) => Number(p));
  if (nums.some((n) => !Number.isInteger(n) || n < 0)) return null;
  return nums as [number, number, number];
}

export function compareEventIds(a: string, b: string): number {
  const ta = parseEventId(a);
  const tb = parseEventId(b);
  if (ta === null || tb === null) throw new Error(`unparseable event id: ${ta === null ? a : b}`);
  for (let i = 0; i < 3; i++) {
    if (ta[i]! !== tb[i]!) return ta[i]! - tb[i]!;
  }
  return 0;
}

interface Frame {
  id: string | null;
  data: string[];
}

export class EventStream {
  lastEventId: string | null;
  private controller: AbortController | null = null;
  private stopped = false;
  private started = false;
  private readonly retryMs: number;
  private readonly fetcher: typeof fetch;

  constructor(private readonly options: StreamOptions) {
    this.lastEventId = options.lastEventId ?? null;
    this.retryMs = options.retryMs ?? 1000;
    this.fetcher = options.fetcher ?? fetch.bind(globalThis);
  }

  start(): void {
    if (this.started) return;
    this.started = true;
    void this.run();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private status(status: StreamStatus): void {
    this.options.onStatus?.(status);
  }

  private async run(): Promise<void> {
    let first = true;
    while (!this.stopped) {
      this.status(first ? "connecting" : "reconnecting");
      first = false;
      this.controller = new AbortController();
      try {
        const headers: Record<string, string> = {
          authorization: `Bearer ${this.options.token}`,
          accept: "text/event-stream",
        };
        if (this.lastEventId !== null) headers["last-event-id"] = this.lastEventId;
        const response = await this.fetcher(this.options.url, {
          headers,
          signal: this.controller.signal,
        });
        if (!response.ok || response.body === null) {
          throw new Error(`stream request failed with status ${response.status}`);
        }
        this.status("live");
        await this.consume(response.body);
      } catch {
        // fall through to the retry loop; stop() aborts land here too
      }
      if (this.stopped) break;
      await new Promise((resolve) => setTimeout(resolve, this.retryMs));
    }
    this.status("stopped");
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let frame: Frame = { id: null, data: [] };
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      let newline: number;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline).replace(/\r$/, "");
        buffer = buffer.slice(newline + 1);
        frame = this.feed(frame, line);
      }
    }
  }

  private feed(frame: Frame, line: string): Frame {
    if (line === "") {
      if (frame.data.length > 0) this.dispatch(frame);
      return { id: null, data: [] };
    }
    if (line.startsWith(":")) return frame; // comment / keep-alive
    if (line.startsWith("id:")) {
      frame.id = line.slice(3).trim();
    } else if (line.startsWith("data:")) {
      frame.data.push(line.slice(5).trim());
    }
    return frame;
  }

  private dispatch(frame: Frame): void {
    let record: EventRecord;
    try {
      record = JSON.parse(frame.data.join(""));
    } catch {
      return; // not ours to crash on; skip the malformed frame
    }
    const id = frame.id ?? record.id;
    if (this.lastEventId !== null && compareEventIds(id, this.lastEventId) <= 0) {
      return; // replayed duplicate from a reconnect
    }
    this.lastEventId = id;
    this.options.onRecord(record);
  }
}
