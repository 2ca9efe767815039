import type { ApiEvent, TranscriptEvent } from "./types.js";

/**
 * Incremental decoder for an SSE byte stream carrying one JSON ApiEvent per
 * `data:` frame. Feed arbitrary chunk boundaries; complete events come out.
 */
export class SseDecoder {
  private buffer = "";

  push(chunk: string): ApiEvent[] {
    this.buffer += chunk;
    const events: ApiEvent[] = [];
    let boundary: number;
    while ((boundary = this.buffer.indexOf("\n\n")) !== -1) {
      const frame = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      for (const line of frame.split("\n")) {
        if (line.startsWith("data: ")) {
          events.push(JSON.parse(line.slice("data: ".length)) as ApiEvent);
        }
      }
    }
    return events;
  }
}

export interface ViewState {
  revision: number;
  treeText: string;
  pendingOperation: { kind: string; content: string } | null;
  log: TranscriptEvent[];
}

/**
 * Replay store: UI state is a pure function of the event sequence, so a
 * disconnect/reconnect that replays the same events reconstructs the same
 * state. Rejects out-of-order or gapped sequence numbers.
 */
export class EventLog {
  readonly events: TranscriptEvent[] = [];

  add(event: TranscriptEvent): void {
    const expected = this.events.length === 0 ? 1 : this.events[this.events.length - 1].seq + 1;
    if (event.seq < expected) {
      return; // duplicate from a reconnect replay
    }
    if (event.seq > expected) {
      throw new Error(`event gap: expected seq ${expected}, got ${event.seq}`);
    }
    this.events.push(event);
  }

  state(): ViewState {
    const state: ViewState = {
      revision: 1,
      treeText: "",
      pendingOperation: null,
      log: [...this.events],
    };
    for (const event of this.events) {
      const payload = parsePayload(event.payload);
      switch (event.kind) {
        case "tree-updated":
        case "manual-revision":
          state.revision = Number(payload["revision"] ?? state.revision);
          state.treeText = String(payload["tree"] ?? state.treeText);
          state.pendingOperation = null;
          break;
        case "next-op":
          state.pendingOperation = {
            kind: String(payload["kind"] ?? ""),
            content: String(payload["content"] ?? ""),
          };
          break;
        case "result-submitted":
          state.pendingOperation = null;
          break;
        default:
          break;
      }
    }
    return state;
  }
}

function parsePayload(payload: string): Record<string, unknown> {
  try {
    const parsed = JSON.parse(payload);
    return typeof parsed === "object" && parsed !== null ? parsed : {};
  } catch {
    return {};
  }
}

/**
 * Follow a session's SSE endpoint with fetch streaming (works in browsers and
 * node). Invokes onEvent per decoded event until the signal aborts.
 */
export async function followEvents(
  url: string,
  onEvent: (event: ApiEvent) => void,
  signal: AbortSignal,
  fetchImpl: typeof fetch = fetch,
): Promise<void> {
  const response = await fetchImpl(url, { signal });
  if (!response.ok || response.body === null) {
    throw new Error(`event stream failed: HTTP ${response.status}`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  const sse = new SseDecoder();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        return;
      }
      for (const event of sse.push(decoder.decode(value, { stream: true }))) {
        onEvent(event);
      }
    }
  } finally {
    reader.releaseLock();
  }
}
