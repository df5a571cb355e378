"""Execute bound programs on the planar world.

Failure semantics follow the two execution indicators: a step is
`unexecutable` when it cannot even be dispatched in this environment
(unknown function, unreachable pose) and `infeasible` when it runs but
the motion cannot achieve its purpose (grasp unsuited to the shape,
nothing held, target out of reach).  Execution stops at the first
non-ok step; failures are data, not exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import world as W
from .correction import OverrideMotion, OverrideRegistry, resolve_override
from .errors import InvalidParameterError, OverrideFailedError
from .planning import BoundStep, Program

OK = "ok"
UNEXECUTABLE = "unexecutable"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class StepResult:
    status: str
    detail: str
    end_pose: tuple[float, float]
    elapsed: float

    def to_dict(self) -> dict:
        return {"status": self.status, "detail": self.detail,
                "end_pose": list(self.end_pose), "elapsed": self.elapsed}


@dataclass(frozen=True)
class ExecutionReport:
    steps: tuple[StepResult, ...]
    executed: bool
    feasible: bool
    success: bool
    functions_used: int

    def to_dict(self) -> dict:
        return {
            "executed": self.executed,
            "feasible": self.feasible,
            "success": self.success,
            "functions_used": self.functions_used,
            "steps": [s.to_dict() for s in self.steps],
        }


@dataclass(frozen=True)
class GoalSpec:
    """Task-family goal predicate, evaluated on the final world."""

    kind: str  # catch | put | open | clean
    target: str | None = None
    destination: str | None = None
    region: tuple[float, float, float, float] | None = None  # cx, cy, w, h
    put_tolerance: float = 0.02
    open_angle: float = math.radians(85)
    coverage: float = 0.95

    @classmethod
    def from_dict(cls, doc: dict) -> "GoalSpec":
        kind = doc.get("kind")
        if kind not in ("catch", "put", "open", "clean"):
            raise InvalidParameterError(f"unknown goal kind {kind!r}")
        region = doc.get("region")
        return cls(
            kind=kind,
            target=doc.get("target"),
            destination=doc.get("destination"),
            region=tuple(region) if region is not None else None,
        )

    def evaluate(self, world: W.WorldState) -> bool:
        if self.kind == "catch":
            return world.holding == self.target
        if self.kind == "put":
            obj = world.objects.get(self.target or "")
            dest = world.objects.get(self.destination or "")
            if obj is None or dest is None:
                return False
            close = float(np.linalg.norm(obj.pose - dest.pose)) <= self.put_tolerance
            return close and world.holding != self.target
        if self.kind == "open":
            obj = world.objects.get(self.target or "")
            return obj is not None and obj.angle >= self.open_angle
        if self.kind == "clean":
            if self.region is None:
                return False
            return world.wipe_coverage(self.region) >= self.coverage
        return False


def _ticks_for(distance: float) -> int:
    return max(1, math.ceil(distance / (W.EE_SPEED * W.SIM_TICK)))


def _travel(world: W.WorldState, target: np.ndarray, on_tick=None) -> float:
    """Straight-line end-effector motion at fixed speed; returns elapsed
    sim seconds.  Targets are validated by callers, so the whole segment
    stays inside the (convex) workspace."""
    start = world.ee.copy()
    dist = float(np.linalg.norm(target - start))
    n = _ticks_for(dist)
    if on_tick is None:
        world.set_ee(target)
        world.clock += n * W.SIM_TICK
    else:
        for k in range(1, n + 1):
            world.set_ee(start + (target - start) * (k / n))
            world.clock += W.SIM_TICK
            on_tick(world)
    return n * W.SIM_TICK


def _wipe_path(center: np.ndarray) -> list[np.ndarray]:
    """Serpentine lanes over a WIPE_SIDE square centered on `center`."""
    half = W.WIPE_SIDE / 2
    lane_gap = W.WIPE_SIDE / (W.WIPE_LANES - 1)
    points = []
    for lane in range(W.WIPE_LANES):
        y = center[1] - half + lane * lane_gap
        xs = (center[0] - half, center[0] + half)
        if lane % 2:
            xs = xs[::-1]
        points.append(np.array([xs[0], y]))
        points.append(np.array([xs[1], y]))
    return points


def _close_gripper_on(world: W.WorldState, label: str | None) -> bool:
    """Close the gripper, latching the target if it is in range."""
    world.gripper = "closed"
    if label is None or world.holding is not None:
        return world.holding is not None
    obj = world.objects.get(label)
    if obj is None:
        return False
    point = W.grasp_point(obj.shape, obj.pose, obj.yaw)
    if float(np.linalg.norm(world.ee - point)) <= W.GRASP_TOLERANCE:
        world.holding = label
        return True
    return False


def _release(world: W.WorldState) -> None:
    world.gripper = "open"
    world.holding = None


def _play_override(world: W.WorldState, step: BoundStep,
                   motion: OverrideMotion, on_tick=None) -> StepResult:
    """Follow a learned replacement trajectory, re-emitting gripper
    events at their recorded times, then check the step's purpose."""
    traj = motion.trajectory
    events = sorted(motion.gripper_times)
    next_event = 0
    start_clock = world.clock
    for t, point in zip(traj.times, traj.positions):
        p = np.asarray(point[:2], dtype=float)
        if not world.contains(p):
            world.set_ee(world.clamp(p))
            world.clock = start_clock + t
            return StepResult(
                INFEASIBLE, "override trajectory left the workspace",
                (world.ee[0], world.ee[1]), t,
            )
        world.set_ee(p)
        world.clock = start_clock + t
        while next_event < len(events) and events[next_event][0] <= t:
            action = events[next_event][1]
            if action == "close":
                _close_gripper_on(world, step.call.target_label)
            else:
                _release(world)
            next_event += 1
        if on_tick is not None:
            on_tick(world)
    elapsed = float(traj.times[-1])

    name = step.call.name
    label = step.call.target_label
    if name == "grasp_default":
        if world.holding == label:
            return StepResult(OK, f"override grasp of {label}",
                              (world.ee[0], world.ee[1]), elapsed)
        return StepResult(INFEASIBLE, f"override grasp missed {label}",
                          (world.ee[0], world.ee[1]), elapsed)
    if name in ("place", "release"):
        if world.holding is None:
            return StepResult(OK, "override release", (world.ee[0], world.ee[1]),
                              elapsed)
        return StepResult(INFEASIBLE, "override did not release the object",
                          (world.ee[0], world.ee[1]), elapsed)
    if name == "open":
        obj = world.objects.get(label or "")
        if obj is not None and float(np.linalg.norm(world.ee - obj.pose)) <= W.OPEN_REACH:
            obj.angle = W.DOOR_SWING
            return StepResult(OK, f"override articulation of {label}",
                              (world.ee[0], world.ee[1]), elapsed)
        return StepResult(INFEASIBLE, f"override ended too far from {label}",
                          (world.ee[0], world.ee[1]), elapsed)
    if name == "wipe":
        if world.holding is not None:
            world.wiped_patches.append((world.ee[0], world.ee[1], W.WIPE_SIDE / 2))
        return StepResult(OK, "override wipe", (world.ee[0], world.ee[1]), elapsed)
    # move_to, lift: reaching the rollout endpoint is the purpose
    return StepResult(OK, f"override {name}", (world.ee[0], world.ee[1]), elapsed)


def step_function(world: W.WorldState, step: BoundStep,
                  overrides: OverrideRegistry | None = None,
                  on_tick=None) -> StepResult:
    """Dispatch one bound step against the world."""
    call = step.call
    name = call.name
    if name not in W.MOTION_FUNCTIONS:
        return StepResult(UNEXECUTABLE, f"unknown motion function {name!r}",
                          (world.ee[0], world.ee[1]), 0.0)

    target_obj = world.objects.get(call.target_label) if call.target_label else None
    if overrides is not None and target_obj is not None:
        try:
            motion = resolve_override(call, overrides, world.ee,
                                      target_obj.pose, target_obj.shape,
                                      target_obj.yaw)
        except OverrideFailedError as exc:
            return StepResult(INFEASIBLE, f"override failed: {exc}",
                              (world.ee[0], world.ee[1]), 0.0)
        if motion is not None:
            return _play_override(world, step, motion, on_tick)

    if name == "move_to":
        if step.pose is None:
            return StepResult(UNEXECUTABLE, "move_to without a resolved pose",
                              (world.ee[0], world.ee[1]), 0.0)
        target = np.array(step.pose, dtype=float)
        if not world.contains(target):
            return StepResult(UNEXECUTABLE,
                              f"target {step.pose} outside the workspace",
                              (world.ee[0], world.ee[1]), 0.0)
        elapsed = _travel(world, target, on_tick)
        return StepResult(OK, f"moved to {step.pose}",
                          (world.ee[0], world.ee[1]), elapsed)

    if name == "grasp_default":
        label = call.target_label
        if target_obj is None:
            return StepResult(UNEXECUTABLE, f"object {label!r} not present",
                              (world.ee[0], world.ee[1]), 0.0)
        world.clock += W.GRIPPER_ACTION_TIME
        if world.holding is not None:
            return StepResult(INFEASIBLE, "gripper already holding an object",
                              (world.ee[0], world.ee[1]), W.GRIPPER_ACTION_TIME)
        if not target_obj.graspable:
            return StepResult(INFEASIBLE, f"{label} is not graspable",
                              (world.ee[0], world.ee[1]), W.GRIPPER_ACTION_TIME)
        if float(np.linalg.norm(world.ee - target_obj.pose)) > W.GRASP_TOLERANCE:
            return StepResult(INFEASIBLE, f"{label} out of grasp range",
                              (world.ee[0], world.ee[1]), W.GRIPPER_ACTION_TIME)
        if not W.grasp_feasibility(world.gripper_max_width, target_obj.shape):
            return StepResult(
                INFEASIBLE,
                f"default grasp unsuited to {label} ({target_obj.shape.kind})",
                (world.ee[0], world.ee[1]), W.GRIPPER_ACTION_TIME,
            )
        world.gripper = "closed"
        world.holding = label
        return StepResult(OK, f"holding {label}",
                          (world.ee[0], world.ee[1]), W.GRIPPER_ACTION_TIME)

    if name == "lift":
        world.clock += W.LIFT_TIME
        if world.holding is None:
            return StepResult(INFEASIBLE, "nothing held to lift",
                              (world.ee[0], world.ee[1]), W.LIFT_TIME)
        if call.target_label and world.holding != call.target_label:
            return StepResult(INFEASIBLE,
                              f"holding {world.holding}, not {call.target_label}",
                              (world.ee[0], world.ee[1]), W.LIFT_TIME)
        return StepResult(OK, f"lifted {world.holding}",
                          (world.ee[0], world.ee[1]), W.LIFT_TIME)

    if name == "place":
        world.clock += W.GRIPPER_ACTION_TIME
        if world.holding is None:
            return StepResult(INFEASIBLE, "nothing held to place",
                              (world.ee[0], world.ee[1]), W.GRIPPER_ACTION_TIME)
        placed = world.holding
        _release(world)
        return StepResult(OK, f"placed {placed}",
                          (world.ee[0], world.ee[1]), W.GRIPPER_ACTION_TIME)

    if name == "open":
        label = call.target_label
        if target_obj is None:
            return StepResult(UNEXECUTABLE, f"object {label!r} not present",
                              (world.ee[0], world.ee[1]), 0.0)
        if target_obj.shape.kind != "door":
            return StepResult(INFEASIBLE, f"{label} is not articulable",
                              (world.ee[0], world.ee[1]), 0.0)
        if float(np.linalg.norm(world.ee - target_obj.pose)) > W.OPEN_REACH:
            return StepResult(INFEASIBLE, f"too far from {label} to open it",
                              (world.ee[0], world.ee[1]), 0.0)
        n = max(1, int(round(1.0 / W.SIM_TICK)))
        for k in range(1, n + 1):
            target_obj.angle = W.DOOR_SWING * k / n
            world.clock += W.SIM_TICK
            if on_tick is not None:
                on_tick(world)
        return StepResult(OK, f"opened {label}",
                          (world.ee[0], world.ee[1]), n * W.SIM_TICK)

    if name == "wipe":
        if step.pose is None:
            return StepResult(UNEXECUTABLE, "wipe without a resolved pose",
                              (world.ee[0], world.ee[1]), 0.0)
        center = np.array(step.pose, dtype=float)
        half = W.WIPE_SIDE / 2
        corners = [center + np.array([sx * half, sy * half])
                   for sx in (-1, 1) for sy in (-1, 1)]
        if not all(world.contains(c) for c in corners):
            return StepResult(UNEXECUTABLE,
                              "wipe square does not fit in the workspace",
                              (world.ee[0], world.ee[1]), 0.0)
        elapsed = 0.0
        for waypoint in _wipe_path(center):
            elapsed += _travel(world, waypoint, on_tick)
        if world.holding is not None:
            world.wiped_patches.append((center[0], center[1], half))
            return StepResult(OK, f"wiped around {step.pose}",
                              (world.ee[0], world.ee[1]), elapsed)
        return StepResult(OK, "wiped with an empty gripper (no coverage)",
                          (world.ee[0], world.ee[1]), elapsed)

    # release
    world.clock += W.GRIPPER_ACTION_TIME
    released = world.holding
    _release(world)
    detail = f"released {released}" if released else "gripper opened"
    return StepResult(OK, detail, (world.ee[0], world.ee[1]),
                      W.GRIPPER_ACTION_TIME)


def run_program(world: W.WorldState, program: Program,
                overrides: OverrideRegistry | None = None,
                goal: GoalSpec | None = None,
                on_tick=None, on_step=None) -> ExecutionReport:
    """Run steps in order, stopping at the first non-ok result.

    `executed` tracks the executability dimension only (no attempted
    step was unexecutable); an infeasible stop still counts as executed.
    `feasible` additionally requires the goal predicate (when given) to
    hold on the final world.
    """
    if not program.steps:
        raise InvalidParameterError("program must be non-empty")
    results: list[StepResult] = []
    for index, step in enumerate(program.steps):
        result = step_function(world, step, overrides, on_tick)
        results.append(result)
        if on_step is not None:
            on_step(index, step, result)
        if result.status != OK:
            break
    executed = all(r.status != UNEXECUTABLE for r in results)
    no_infeasible = all(r.status != INFEASIBLE for r in results)
    goal_ok = goal.evaluate(world) if goal is not None \
        else all(r.status == OK for r in results)
    feasible = executed and no_infeasible and goal_ok
    return ExecutionReport(
        steps=tuple(results),
        executed=executed,
        feasible=feasible,
        success=executed and feasible,
        functions_used=len(results),
    )
