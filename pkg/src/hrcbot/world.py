"""Planar desk world: object shapes, scene files, robot state and the
motion-function catalog shared by planner and executor.

The world is a 2D top-down kinematic model: a floating end effector
moving at constant speed inside a rectangular workspace, objects with
shape-dependent grasp geometry, doors that articulate, and a wiped-area
record for cleaning goals.  No dynamics, no collision response.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidParameterError

# Motion-function catalog: the closed set of atomic robot actions.
MOTION_FUNCTIONS = ("move_to", "grasp_default", "lift", "place", "open", "wipe", "release")
# Functions that must name a target object.
OBJECT_DIRECTED = ("grasp_default", "place", "open", "wipe")

SHAPE_KINDS = ("box", "cylinder", "bowl", "door")

SIM_TICK = 0.01            # s
EE_SPEED = 0.25            # m/s straight-line end-effector speed
GRASP_TOLERANCE = 0.02     # m, object-to-gripper distance for a grasp
OPEN_REACH = 0.05          # m, handle distance required to articulate
DOOR_SWING = math.pi / 2   # rad, full articulation
WIPE_SIDE = 0.10           # m, side of the square a wipe pass covers
WIPE_LANES = 5
GRIPPER_ACTION_TIME = 0.3  # s, open/close
LIFT_TIME = 0.2            # s

DEFAULT_WORKSPACE = (0.0, 0.0, 0.8, 0.6)
DEFAULT_ROBOT_START = (0.10, 0.10)
DEFAULT_GRIPPER_MAX_WIDTH = 0.08


@dataclass(frozen=True)
class ObjectShape:
    kind: str
    grasp_width: float
    rim_curvature: bool = False

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ConfigError(f"unknown shape kind {self.kind!r}")
        if self.grasp_width <= 0:
            raise ConfigError("grasp_width must be positive")


@dataclass(frozen=True)
class SceneObject:
    label: str
    shape: ObjectShape
    pose: tuple[float, float, float]  # x, y, yaw
    graspable: bool = True


@dataclass
class SimObject:
    """Mutable runtime state of one scene object."""

    label: str
    shape: ObjectShape
    pose: np.ndarray        # (2,) meters
    yaw: float
    graspable: bool
    angle: float = 0.0      # articulation, doors only

    @classmethod
    def from_scene(cls, obj: SceneObject) -> "SimObject":
        x, y, yaw = obj.pose
        return cls(obj.label, obj.shape, np.array([x, y], dtype=float), yaw,
                   obj.graspable)


def grasp_point(shape: ObjectShape, pose: np.ndarray, yaw: float) -> np.ndarray:
    """Where the gripper must be to grasp an object of this shape.

    Boxes, cylinders and doors are grasped at the center; a bowl is
    grasped at its rim (the center grasp is what the rim curvature
    defeats), offset along the object's yaw.
    """
    pose = np.asarray(pose, dtype=float)
    if shape.kind == "bowl":
        radius = shape.grasp_width / 2.0
        return pose + radius * np.array([math.cos(yaw), math.sin(yaw)])
    return pose.copy()


def grasp_feasibility(gripper_max_width: float, shape: ObjectShape) -> bool:
    """Default grasp succeeds only on shapes that fit the gripper and
    have no rim curvature."""
    if gripper_max_width <= 0:
        raise InvalidParameterError("gripper_max_width must be positive")
    return shape.grasp_width <= gripper_max_width and not shape.rim_curvature


class WorldState:
    """One simulation session's mutable world."""

    def __init__(self, objects: list[SceneObject],
                 workspace: tuple[float, float, float, float] = DEFAULT_WORKSPACE,
                 robot_start: tuple[float, float] = DEFAULT_ROBOT_START,
                 gripper_max_width: float = DEFAULT_GRIPPER_MAX_WIDTH):
        xmin, ymin, xmax, ymax = workspace
        if not (xmin < xmax and ymin < ymax):
            raise ConfigError(f"degenerate workspace {workspace}")
        self.workspace = (float(xmin), float(ymin), float(xmax), float(ymax))
        self.ee = np.array(robot_start, dtype=float)
        if not self.contains(self.ee):
            raise ConfigError("robot start outside workspace")
        self.yaw = 0.0
        self.gripper = "open"        # "open" | "closed"
        self.holding: str | None = None
        self.gripper_max_width = float(gripper_max_width)
        self.clock = 0.0
        self.objects: dict[str, SimObject] = {}
        for obj in objects:
            if obj.label in self.objects:
                raise ConfigError(f"duplicate object label {obj.label!r}")
            self.objects[obj.label] = SimObject.from_scene(obj)
        self.wiped_patches: list[tuple[float, float, float]] = []  # cx, cy, half

    def contains(self, p) -> bool:
        xmin, ymin, xmax, ymax = self.workspace
        return bool(xmin - 1e-12 <= p[0] <= xmax + 1e-12
                    and ymin - 1e-12 <= p[1] <= ymax + 1e-12)

    def clamp(self, p: np.ndarray) -> np.ndarray:
        xmin, ymin, xmax, ymax = self.workspace
        return np.array([min(max(p[0], xmin), xmax), min(max(p[1], ymin), ymax)])

    def set_ee(self, p: np.ndarray) -> None:
        """Move the end effector; a held object is slaved to it."""
        self.ee = np.asarray(p, dtype=float).copy()
        if self.holding is not None:
            self.objects[self.holding].pose = self.ee.copy()

    def gripper_state(self) -> str:
        if self.holding is not None:
            return f"holding({self.holding})"
        return self.gripper

    def wipe_coverage(self, region: tuple[float, float, float, float]) -> float:
        """Fraction of a (cx, cy, w, h) region covered by wiped patches,
        computed on a 2 mm grid."""
        cx, cy, w, h = region
        if w <= 0 or h <= 0:
            raise InvalidParameterError("region must have positive extent")
        if not self.wiped_patches:
            return 0.0
        nx = max(2, int(round(w / 0.002)))
        ny = max(2, int(round(h / 0.002)))
        xs = np.linspace(cx - w / 2, cx + w / 2, nx)
        ys = np.linspace(cy - h / 2, cy + h / 2, ny)
        gx, gy = np.meshgrid(xs, ys)
        covered = np.zeros(gx.shape, dtype=bool)
        for px, py, half in self.wiped_patches:
            covered |= (np.abs(gx - px) <= half) & (np.abs(gy - py) <= half)
        return float(covered.mean())

    def snapshot(self) -> dict:
        """JSON-serializable view for the event stream and UI."""
        return {
            "clock": round(self.clock, 6),
            "robot": {
                "x": self.ee[0], "y": self.ee[1], "yaw": self.yaw,
                "gripper": self.gripper_state(),
                "holding": self.holding,
            },
            "objects": [
                {
                    "label": o.label, "kind": o.shape.kind,
                    "x": o.pose[0], "y": o.pose[1], "yaw": o.yaw,
                    "angle": o.angle, "graspable": o.graspable,
                    "grasp_width": o.shape.grasp_width,
                }
                for o in self.objects.values()
            ],
            "workspace": list(self.workspace),
        }


@dataclass(frozen=True)
class SceneSpec:
    """Parsed scene file plus the world-frame defaults."""

    objects: tuple[SceneObject, ...]
    workspace: tuple[float, float, float, float] = DEFAULT_WORKSPACE
    robot_start: tuple[float, float] = DEFAULT_ROBOT_START
    gripper_max_width: float = DEFAULT_GRIPPER_MAX_WIDTH

    def build_world(self) -> WorldState:
        return WorldState(list(self.objects), self.workspace,
                          self.robot_start, self.gripper_max_width)


def _object_from_dict(d: dict) -> SceneObject:
    try:
        shape = ObjectShape(
            kind=d["kind"],
            grasp_width=float(d["grasp_width"]),
            rim_curvature=bool(d.get("rim_curvature", False)),
        )
        pose = d["pose"]
        if len(pose) == 2:
            pose = [pose[0], pose[1], 0.0]
        return SceneObject(
            label=str(d["label"]),
            shape=shape,
            pose=(float(pose[0]), float(pose[1]), float(pose[2])),
            graspable=bool(d.get("graspable", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scene object {d!r}: {exc}") from exc


def scene_from_json(doc) -> SceneSpec:
    """A scene file is a JSON list of objects; a wrapping dict may
    override workspace, robot start and gripper width."""
    defaults = {}
    if isinstance(doc, dict):
        defaults = doc
        doc = doc.get("objects", [])
    if not isinstance(doc, list):
        raise ConfigError("scene file must be a JSON list of objects")
    objects = tuple(_object_from_dict(d) for d in doc)
    labels = [o.label for o in objects]
    if len(set(labels)) != len(labels):
        raise ConfigError("duplicate labels in scene file")
    return SceneSpec(
        objects=objects,
        workspace=tuple(defaults.get("workspace", DEFAULT_WORKSPACE)),
        robot_start=tuple(defaults.get("robot_start", DEFAULT_ROBOT_START)),
        gripper_max_width=float(
            defaults.get("gripper_max_width", DEFAULT_GRIPPER_MAX_WIDTH)
        ),
    )


def load_scene(path: str | Path) -> SceneSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scene file {path}: {exc}") from exc
    return scene_from_json(doc)
