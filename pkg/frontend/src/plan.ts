/** Plan-review view model: flatten a plan summary into display rows and
 * flag anything the motion catalog cannot execute. */

import type { PlanSummary } from "./types.js";

export const MOTION_CATALOG = [
  "move_to", "grasp_default", "lift", "place", "open", "wipe", "release",
] as const;

const OBJECT_DIRECTED = new Set(["grasp_default", "place", "open", "wipe"]);

export interface PlanRow {
  index: number;
  subtask: string | null;
  text: string;
  valid: boolean;
  reason?: string;
}

export function functionText(name: string, target: string | null,
                             args: number[]): string {
  if (target) return `${name}(${target})`;
  if (args.length) return `${name}(${args.map((a) => a.toFixed(2)).join(", ")})`;
  return name;
}

export function planRows(plan: PlanSummary): PlanRow[] {
  const rows: PlanRow[] = [];
  let index = 0;
  for (const subtask of plan.subtasks) {
    for (const fn of subtask.functions) {
      let valid = true;
      let reason: string | undefined;
      if (!(MOTION_CATALOG as readonly string[]).includes(fn.name)) {
        valid = false;
        reason = "unknown motion function";
      } else if (OBJECT_DIRECTED.has(fn.name) && !fn.target) {
        valid = false;
        reason = "missing target";
      }
      rows.push({
        index,
        subtask: subtask.text,
        text: functionText(fn.name, fn.target, fn.args),
        valid,
        reason,
      });
      index += 1;
    }
  }
  return rows;
}
