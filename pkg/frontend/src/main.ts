/** Operator console wiring: one stream subscription drives the view;
 * user actions go through the typed API client. */

import { ApiClient, ApiError } from "./api.js";
import { parseMetricsCsv, sortTable, MetricsTable } from "./metricsView.js";
import { planRows } from "./plan.js";
import { SceneRenderer } from "./scene.js";
import { streamEvents } from "./stream.js";
import { TeleopRecorder } from "./teleop.js";
import type { PlanReadyEvent, StepResultEvent } from "./types.js";

const api = new ApiClient("");

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const modeBadge = document.getElementById("mode") as HTMLSpanElement;
const clockBadge = document.getElementById("clock") as HTMLSpanElement;
const planPanel = document.getElementById("plan-panel") as HTMLDivElement;
const planList = document.getElementById("plan-rows") as HTMLUListElement;
const planTitle = document.getElementById("plan-title") as HTMLSpanElement;
const stepLog = document.getElementById("step-log") as HTMLUListElement;
const commandInput = document.getElementById("command") as HTMLInputElement;
const metricsTable = document.getElementById("metrics") as HTMLTableElement;
const teleopStatus = document.getElementById("teleop-status") as HTMLSpanElement;
const teleopFunction = document.getElementById("teleop-function") as HTMLSelectElement;
const teleopTarget = document.getElementById("teleop-target") as HTMLInputElement;

const renderer = new SceneRenderer(canvas);
const recorder = new TeleopRecorder(api, 30);
let pendingPlan: PlanReadyEvent | null = null;
let currentMode = "idle";
let samplerTimer: number | null = null;
let metrics: MetricsTable = { columns: [], rows: [] };

function note(message: string, isError = false): void {
  banner.textContent = message;
  banner.className = isError ? "banner error" : "banner";
}

recorder.onError = (message) => {
  note(message, true);
  stopSampler();
  teleopStatus.textContent = "aborted";
};

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.status}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

// ---------------------------------------------------------------- stream

async function followStream(): Promise<void> {
  for (;;) {
    try {
      for await (const event of streamEvents(api.streamUrl())) {
        switch (event.kind) {
          case "world_snapshot": {
            currentMode = event.mode;
            modeBadge.textContent = event.mode;
            clockBadge.textContent = `${event.clock.toFixed(2)} s`;
            if (event.mode === "executing") {
              renderer.trace.push({ x: event.robot.x, y: event.robot.y });
            }
            if (!renderer.render(event)) note("malformed snapshot", true);
            break;
          }
          case "plan_ready":
            pendingPlan = event;
            showPlan(event);
            break;
          case "step_result":
            logStep(event);
            break;
          case "report":
            if (event.report_type === "execution") {
              renderer.clearTrace();
              note(event.success
                ? "task succeeded"
                : `task failed (executed=${event.executed} feasible=${event.feasible})`,
                !event.success);
              void refreshMetricsFromServer();
            }
            if (event.report_type === "override") {
              note(`override learned: ${event.function} on ${event.shape_kind}`);
            }
            break;
          case "error":
            note(`${event.where}: ${event.detail}`, true);
            break;
        }
      }
      note("stream closed; reconnecting", true);
    } catch (err) {
      note(`stream lost (${describe(err)}); reconnecting`, true);
    }
    await new Promise((resolve) => setTimeout(resolve, 1000));
  }
}

// ------------------------------------------------------------------ plan

function showPlan(plan: PlanReadyEvent): void {
  planPanel.classList.remove("hidden");
  planTitle.textContent =
    `${plan.command} — ${plan.layer} layer, ${plan.total_functions} functions`;
  planList.replaceChildren();
  let lastSubtask: string | null = null;
  for (const row of planRows(plan)) {
    if (row.subtask !== lastSubtask && row.subtask !== null) {
      const header = document.createElement("li");
      header.className = "subtask";
      header.textContent = row.subtask;
      planList.appendChild(header);
      lastSubtask = row.subtask;
    }
    const item = document.createElement("li");
    item.textContent = row.valid ? row.text : `${row.text}  ⚠ ${row.reason}`;
    if (!row.valid) item.className = "invalid";
    planList.appendChild(item);
  }
}

function logStep(step: StepResultEvent): void {
  const item = document.createElement("li");
  item.textContent = `#${step.index} ${step.name}` +
    (step.target ? `(${step.target})` : "") + ` → ${step.status}`;
  item.className = step.status;
  stepLog.appendChild(item);
}

async function submitCommand(): Promise<void> {
  const text = commandInput.value.trim();
  if (!text) return;
  stepLog.replaceChildren();
  try {
    await api.submitCommand(text);
    note(`plan ready for approval: ${text}`);
  } catch (err) {
    note(`planning failed: ${describe(err)}`, true);
  }
}

async function approvePending(): Promise<void> {
  if (!pendingPlan) return;
  const planId = pendingPlan.plan_id;
  pendingPlan = null;
  planPanel.classList.add("hidden");
  renderer.clearTrace();
  try {
    await api.approvePlan(planId);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      note("plan is stale; submit the command again", true);
    } else {
      note(describe(err), true);
    }
  }
}

async function rejectPending(): Promise<void> {
  if (!pendingPlan) return;
  try {
    await api.rejectPlan(pendingPlan.plan_id);
  } catch (err) {
    note(describe(err), true);
  }
  pendingPlan = null;
  planPanel.classList.add("hidden");
  note("plan rejected");
}

// ---------------------------------------------------------------- teleop

function stopSampler(): void {
  if (samplerTimer !== null) {
    window.clearInterval(samplerTimer);
    samplerTimer = null;
  }
}

async function beginTeleop(): Promise<void> {
  try {
    await recorder.begin(teleopFunction.value,
                         teleopTarget.value.trim() || undefined);
    teleopStatus.textContent = "recording — drag on the canvas, press g for gripper";
    note("teleoperation recording");
  } catch (err) {
    note(`teleop begin failed: ${describe(err)}`, true);
  }
}

canvas.addEventListener("pointermove", (ev) => {
  if (recorder.state !== "recording") return;
  const mapping = renderer.currentMapping();
  if (!mapping) return;
  const rect = canvas.getBoundingClientRect();
  const world = mapping.pixelToWorld(
    (ev.clientX - rect.left) * (canvas.width / rect.width),
    (ev.clientY - rect.top) * (canvas.height / rect.height));
  recorder.pointer(world.x, world.y);
});

canvas.addEventListener("pointerdown", () => {
  if (recorder.state === "recording" && samplerTimer === null) {
    samplerTimer = window.setInterval(
      () => void recorder.sampleNow(), 1000 / recorder.rateHz);
  }
});

canvas.addEventListener("pointerup", () => {
  if (recorder.state !== "recording") return;
  stopSampler();
  void (async () => {
    const keep = window.confirm("Keep this demonstration? OK fits it, Cancel aborts.");
    try {
      if (keep) {
        const summary = await recorder.finish();
        teleopStatus.textContent =
          `override stored for ${summary.function} × ${summary.shape_kind}`;
      } else {
        await recorder.abort();
        teleopStatus.textContent = "aborted";
      }
    } catch (err) {
      note(describe(err), true);
      teleopStatus.textContent = "aborted";
    }
  })();
});

window.addEventListener("keydown", (ev) => {
  if (ev.key === "g") recorder.toggleGripper();
});

// --------------------------------------------------------------- metrics

function renderMetrics(table: MetricsTable): void {
  metrics = table;
  const head = metricsTable.createTHead();
  metricsTable.replaceChildren(head);
  const headRow = head.insertRow();
  table.columns.forEach((column, i) => {
    const cell = document.createElement("th");
    cell.textContent = column;
    cell.addEventListener("click", () => renderMetrics(sortTable(metrics, i)));
    headRow.appendChild(cell);
  });
  const body = metricsTable.createTBody();
  for (const row of table.rows) {
    const tr = body.insertRow();
    for (const value of row) {
      const td = tr.insertCell();
      td.textContent = typeof value === "number" && !Number.isInteger(value)
        ? value.toFixed(2) : String(value);
    }
  }
}

async function refreshMetricsFromServer(): Promise<void> {
  try {
    const latest = await api.metricsLatest();
    renderMetrics(parseMetricsCsv(latest.csv));
  } catch {
    /* no metrics yet */
  }
}

async function runSuite(): Promise<void> {
  note("running metrics suite…");
  try {
    const result = await api.metricsRun();
    renderMetrics(parseMetricsCsv(result.csv));
    note("metrics suite finished");
  } catch (err) {
    note(`metrics failed: ${describe(err)}`, true);
  }
}

// ---------------------------------------------------------------- wiring

document.getElementById("submit")!.addEventListener("click", () => void submitCommand());
commandInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") void submitCommand();
});
document.getElementById("approve")!.addEventListener("click", () => void approvePending());
document.getElementById("reject")!.addEventListener("click", () => void rejectPending());
document.getElementById("teleop-begin")!.addEventListener("click", () => void beginTeleop());
document.getElementById("metrics-run")!.addEventListener("click", () => void runSuite());

void refreshMetricsFromServer();
void followStream();
