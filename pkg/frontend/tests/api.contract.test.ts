import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";

/** The service's documented HTTP surface; the UI must not stray. */
const DOCUMENTED: RegExp[] = [
  /^POST \/command$/,
  /^GET \/plan\/[^/]+$/,
  /^POST \/plan\/[^/]+\/approve$/,
  /^POST \/plan\/[^/]+\/reject$/,
  /^GET \/registry$/,
  /^GET \/overrides$/,
  /^POST \/teleop\/begin$/,
  /^POST \/teleop\/sample$/,
  /^POST \/teleop\/finish$/,
  /^POST \/teleop\/abort$/,
  /^POST \/metrics\/run$/,
  /^GET \/metrics\/latest$/,
  /^GET \/stream$/,
];

describe("endpoint contract", () => {
  afterEach(() => vi.unstubAllGlobals());

  it("the client touches only documented endpoints", async () => {
    const seen: string[] = [];
    vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
      seen.push(`${init?.method ?? "GET"} ${url}`);
      return new Response("{}", {
        status: 200, headers: { "content-type": "application/json" },
      });
    });

    const api = new ApiClient("");
    await api.submitCommand("catch the cup");
    await api.getPlan("abc");
    await api.approvePlan("abc");
    await api.rejectPlan("abc");
    await api.registry();
    await api.overrides();
    await api.teleopBegin("grasp_default", "bowl");
    await api.teleopSample("s", 0, 0.1, 0.1);
    await api.teleopFinish("s");
    await api.teleopAbort("s");
    await api.metricsRun();
    await api.metricsLatest();
    seen.push(`GET ${api.streamUrl()}`);

    expect(seen.length).toBeGreaterThanOrEqual(13);
    for (const request of seen) {
      expect(
        DOCUMENTED.some((pattern) => pattern.test(request)),
        `${request} is not in the documented surface`,
      ).toBe(true);
    }
  });
});
