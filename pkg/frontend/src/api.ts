/** Typed client over the documented service endpoints — and only
 * those; the contract test enforces the list. */

import { parseEventLine } from "./stream.js";
import type {
  HrcEvent,
  MetricsRowView,
  OverrideSummary,
  OverrideView,
  PlanSummary,
  RegistryEntryView,
  TeleopBeginReply,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const doc = await response.json();
      if (doc && typeof doc.detail === "string") detail = doc.detail;
      else detail = JSON.stringify(doc);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    return expectJson<T>(response);
  }

  private async get<T>(path: string): Promise<T> {
    return expectJson<T>(await fetch(this.base + path));
  }

  submitCommand(text: string): Promise<{ plan_id: string; plan: PlanSummary }> {
    return this.post("/command", { text });
  }

  getPlan(planId: string): Promise<{ plan_id: string; plan: PlanSummary; active: boolean }> {
    return this.get(`/plan/${planId}`);
  }

  /** Approval replies with an ND-JSON stream of step results ending in
   * the execution report; returned here as a parsed array. */
  async approvePlan(planId: string): Promise<HrcEvent[]> {
    const response = await fetch(`${this.base}/plan/${planId}/approve`, {
      method: "POST",
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    const text = await response.text();
    return text
      .split("\n")
      .map(parseEventLine)
      .filter((event): event is HrcEvent => event !== null);
  }

  rejectPlan(planId: string): Promise<{ rejected: string; mode: string }> {
    return this.post(`/plan/${planId}/reject`);
  }

  registry(): Promise<Record<string, RegistryEntryView>> {
    return this.get("/registry");
  }

  overrides(): Promise<OverrideView[]> {
    return this.get("/overrides");
  }

  teleopBegin(functionName: string, targetLabel?: string,
              shapeKind?: string): Promise<TeleopBeginReply> {
    return this.post("/teleop/begin", {
      function: functionName,
      target_label: targetLabel ?? null,
      shape_kind: shapeKind ?? null,
    });
  }

  teleopSample(sessionId: string, t: number, x: number, y: number,
               gripper?: "close" | "open"): Promise<{ accepted: number }> {
    return this.post("/teleop/sample", {
      session_id: sessionId, t, x, y, gripper: gripper ?? null,
    });
  }

  teleopFinish(sessionId: string): Promise<OverrideSummary> {
    return this.post("/teleop/finish", { session_id: sessionId });
  }

  teleopAbort(sessionId: string): Promise<{ aborted: string }> {
    return this.post("/teleop/abort", { session_id: sessionId });
  }

  metricsRun(suite?: string): Promise<{ rows: MetricsRowView[]; csv: string }> {
    return this.post("/metrics/run", suite ? { suite } : {});
  }

  metricsLatest(): Promise<{ rows: MetricsRowView[]; csv: string }> {
    return this.get("/metrics/latest");
  }

  streamUrl(): string {
    return `${this.base}/stream`;
  }
}
