import { describe, expect, it } from "vitest";

import { functionText, planRows } from "../src/plan.js";
import type { PlanSummary } from "../src/types.js";

const THREE_STEP: PlanSummary = {
  command: "catch the cup",
  layer: "second",
  total_functions: 3,
  subtasks: [{
    text: null,
    functions: [
      { name: "move_to", target: "cup", args: [] },
      { name: "grasp_default", target: "cup", args: [] },
      { name: "lift", target: "cup", args: [] },
    ],
  }],
};

describe("plan review rows", () => {
  it("flattens a three-function plan into three rows", () => {
    const rows = planRows(THREE_STEP);
    expect(rows).toHaveLength(3);
    expect(rows.map((r) => r.text)).toEqual(
      ["move_to(cup)", "grasp_default(cup)", "lift(cup)"]);
    expect(rows.every((r) => r.valid)).toBe(true);
  });

  it("keeps subtask grouping and global order", () => {
    const plan: PlanSummary = {
      command: "clean",
      layer: "first",
      total_functions: 11,
      subtasks: [
        { text: "catch the wiper",
          functions: [{ name: "move_to", target: "wiper", args: [] },
                      { name: "grasp_default", target: "wiper", args: [] },
                      { name: "lift", target: "wiper", args: [] }] },
        { text: "wipe the cabinet top",
          functions: Array(4).fill(
            { name: "wipe", target: "cabinet_top_left", args: [] }) },
        { text: "put the wiper back",
          functions: [{ name: "move_to", target: "wiper_home", args: [] },
                      { name: "place", target: "wiper_home", args: [] },
                      { name: "release", target: null, args: [] },
                      { name: "move_to", target: null, args: [0.1, 0.1] }] },
      ],
    };
    const rows = planRows(plan);
    expect(rows).toHaveLength(11);
    expect(rows.map((r) => r.index)).toEqual([...Array(11).keys()]);
    expect(rows[3].subtask).toBe("wipe the cabinet top");
    expect(rows[10].text).toBe("move_to(0.10, 0.10)");
  });

  it("flags unknown functions and missing targets", () => {
    const corrupted: PlanSummary = {
      ...THREE_STEP,
      subtasks: [{
        text: null,
        functions: [
          { name: "sweep_arm", target: "cup", args: [] },
          { name: "grasp_default", target: null, args: [] },
          { name: "lift", target: null, args: [] },
        ],
      }],
    };
    const rows = planRows(corrupted);
    expect(rows[0].valid).toBe(false);
    expect(rows[0].reason).toBe("unknown motion function");
    expect(rows[1].valid).toBe(false);
    expect(rows[1].reason).toBe("missing target");
    expect(rows[2].valid).toBe(true);
  });
});

describe("function text", () => {
  it("renders label, literal and bare forms", () => {
    expect(functionText("move_to", "cup", [])).toBe("move_to(cup)");
    expect(functionText("move_to", null, [0.25, 0.1])).toBe("move_to(0.25, 0.10)");
    expect(functionText("release", null, [])).toBe("release");
  });
});
