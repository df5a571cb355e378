import { describe, expect, it } from "vitest";

import { LineSplitter, parseEventLine } from "../src/stream.js";

describe("line splitting", () => {
  it("reassembles lines across chunk boundaries", () => {
    const splitter = new LineSplitter();
    expect(splitter.push('{"kind":"wor')).toEqual([]);
    expect(splitter.push('ld_snapshot"}\n{"kind":"rep')).toEqual(
      ['{"kind":"world_snapshot"}']);
    expect(splitter.push('ort"}\n')).toEqual(['{"kind":"report"}']);
    expect(splitter.flush()).toEqual([]);
  });

  it("flushes a trailing unterminated line", () => {
    const splitter = new LineSplitter();
    splitter.push('{"kind":"error","where":"x","detail":"y"}');
    expect(splitter.flush()).toEqual(
      ['{"kind":"error","where":"x","detail":"y"}']);
  });
});

describe("event parsing", () => {
  it("parses well-formed events", () => {
    const event = parseEventLine('{"kind":"plan_ready","plan_id":"abc"}');
    expect(event).not.toBeNull();
    expect(event!.kind).toBe("plan_ready");
  });

  it("ignores blanks and noise instead of throwing", () => {
    expect(parseEventLine("")).toBeNull();
    expect(parseEventLine("   ")).toBeNull();
    expect(parseEventLine("not json")).toBeNull();
    expect(parseEventLine('{"no_kind": 1}')).toBeNull();
    expect(parseEventLine("[1,2,3]")).toBeNull();
  });
});
