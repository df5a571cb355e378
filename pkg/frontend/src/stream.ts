/** ND-JSON event stream client: one fetch, newline-framed JSON events. */

import type { HrcEvent } from "./types.js";

/** Parse one stream line; returns null for blanks or non-JSON noise so
 * a glitch never kills the reader loop. */
export function parseEventLine(line: string): HrcEvent | null {
  const trimmed = line.trim();
  if (!trimmed) return null;
  try {
    const doc = JSON.parse(trimmed);
    if (typeof doc === "object" && doc !== null && typeof doc.kind === "string") {
      return doc as HrcEvent;
    }
    return null;
  } catch {
    return null;
  }
}

/** Split an incoming byte stream into complete lines, keeping any
 * partial trailing line buffered between chunks. */
export class LineSplitter {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const parts = this.buffer.split("\n");
    this.buffer = parts.pop() ?? "";
    return parts;
  }

  flush(): string[] {
    const rest = this.buffer;
    this.buffer = "";
    return rest ? [rest] : [];
  }
}

export async function* streamEvents(
  url: string,
  signal?: AbortSignal,
): AsyncGenerator<HrcEvent> {
  const response = await fetch(url, { signal });
  if (!response.ok || response.body === null) {
    throw new Error(`stream request failed: ${response.status}`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  const splitter = new LineSplitter();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const line of splitter.push(decoder.decode(value, { stream: true }))) {
        const event = parseEventLine(line);
        if (event) yield event;
      }
    }
    for (const line of splitter.flush()) {
      const event = parseEventLine(line);
      if (event) yield event;
    }
  } finally {
    reader.releaseLock();
    try {
      await response.body.cancel();
    } catch {
      /* connection already gone */
    }
  }
}
