/** Wire types mirrored from the service; the UI renders only what the
 * server sends and never extrapolates. */

export interface RobotView {
  x: number;
  y: number;
  yaw: number;
  gripper: string;
  holding: string | null;
}

export interface ObjectView {
  label: string;
  kind: string;
  x: number;
  y: number;
  yaw: number;
  angle: number;
  graspable: boolean;
  grasp_width: number;
}

export interface WorldSnapshot {
  kind: "world_snapshot";
  clock: number;
  mode: string;
  robot: RobotView;
  objects: ObjectView[];
  workspace: [number, number, number, number];
}

export interface FunctionView {
  name: string;
  target: string | null;
  args: number[];
}

export interface SubtaskView {
  text: string | null;
  functions: FunctionView[];
}

export interface PlanSummary {
  command: string;
  layer: "first" | "second";
  total_functions: number;
  subtasks: SubtaskView[];
}

export interface PlanReadyEvent extends PlanSummary {
  kind: "plan_ready";
  plan_id: string;
}

export interface StepResultEvent {
  kind: "step_result";
  plan_id: string;
  index: number;
  name: string;
  target: string | null;
  status: "ok" | "unexecutable" | "infeasible";
  detail: string;
  end_pose: [number, number];
  elapsed: number;
}

export interface ReportEvent {
  kind: "report";
  report_type: string;
  plan_id?: string;
  executed?: boolean;
  feasible?: boolean;
  success?: boolean;
  functions_used?: number;
  rows?: MetricsRowView[];
  [extra: string]: unknown;
}

export interface ErrorEvent {
  kind: "error";
  where: string;
  detail: string;
}

export type HrcEvent =
  | WorldSnapshot
  | PlanReadyEvent
  | StepResultEvent
  | ReportEvent
  | ErrorEvent;

export interface MetricsRowView {
  task: string;
  num: number;
  fns: number;
  sr: number;
  exec: number;
  fsb: number;
}

export interface OverrideView {
  function: string;
  shape_kind: string;
  tau: number;
  n_basis: number;
  dof: number;
  revision: number;
}

export interface RegistryEntryView {
  pose: [number, number, number];
  registered_at: number;
  last_update: number;
}

export interface TeleopBeginReply {
  session_id: string;
  function: string;
  shape_kind: string;
}

export interface OverrideSummary {
  function: string;
  shape_kind: string;
  tau: number;
  n_basis: number;
  samples: number;
}
