"""Demonstration-driven motion correction.

When a default motion function fails on some object shape, an operator
records a replacement trajectory by teleoperation.  The recording is
fitted as a movement primitive and registered under the (function,
shape-kind) pair; execution consults the registry first, so one bowl
demonstration generalizes to every bowl pose the scene may take.
Gripper events are remembered as phase fractions of the demo and
re-emitted at the same fractions on replay, which survives temporal
scaling.
"""

from __future__ import annotations

import itertools
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dmp
from .errors import (
    ConfigError,
    DivergenceError,
    FitFailedError,
    InsufficientDataError,
    OverrideFailedError,
    RejectedSampleError,
    SessionClosedError,
    SessionConflictError,
)
from .world import MOTION_FUNCTIONS, SHAPE_KINDS, ObjectShape, grasp_point

GRIPPER_ACTIONS = ("close", "open")


@dataclass(frozen=True)
class OverrideKey:
    function: str
    shape_kind: str

    def __post_init__(self):
        if self.function not in MOTION_FUNCTIONS:
            raise ConfigError(f"unknown motion function {self.function!r}")
        if self.shape_kind not in SHAPE_KINDS:
            raise ConfigError(f"unknown shape kind {self.shape_kind!r}")


@dataclass(frozen=True)
class GripperEvent:
    fraction: float  # position within the demo, t/tau in [0, 1]
    action: str

    def __post_init__(self):
        if self.action not in GRIPPER_ACTIONS:
            raise ConfigError(f"unknown gripper action {self.action!r}")


@dataclass(frozen=True)
class OverrideEntry:
    model: dmp.DMPModel
    gripper_events: tuple[GripperEvent, ...]
    revision: int

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "gripper_events": [[e.fraction, e.action] for e in self.gripper_events],
            "revision": self.revision,
        }


class OverrideRegistry:
    """(function, shape kind) -> learned replacement motion.

    At most one override per key; replacement is atomic, so a reader
    sees the old or the new entry, never a mixture.
    """

    def __init__(self):
        self._entries: dict[OverrideKey, OverrideEntry] = {}
        self._lock = threading.Lock()
        self._revisions = itertools.count(1)

    def put(self, key: OverrideKey, model: dmp.DMPModel,
            gripper_events: tuple[GripperEvent, ...] = ()) -> OverrideEntry:
        entry = OverrideEntry(model, tuple(gripper_events), next(self._revisions))
        with self._lock:
            self._entries[key] = entry
        return entry

    def get(self, key: OverrideKey) -> OverrideEntry | None:
        with self._lock:
            return self._entries.get(key)

    def items(self) -> list[tuple[OverrideKey, OverrideEntry]]:
        with self._lock:
            return list(self._entries.items())

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def snapshot(self) -> list[dict]:
        return [
            {
                "function": key.function,
                "shape_kind": key.shape_kind,
                "tau": entry.model.tau,
                "n_basis": entry.model.n_basis,
                "dof": entry.model.dof,
                "gripper_events": [[e.fraction, e.action]
                                   for e in entry.gripper_events],
                "revision": entry.revision,
            }
            for key, entry in self.items()
        ]

    def save_dir(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for key, entry in self.items():
            doc = {"function": key.function, "shape_kind": key.shape_kind}
            doc.update(entry.to_dict())
            path = directory / f"{key.function}__{key.shape_kind}.json"
            path.write_text(json.dumps(doc, indent=2))

    def load_dir(self, directory: str | Path) -> int:
        directory = Path(directory)
        count = 0
        for path in sorted(directory.glob("*.json")):
            try:
                doc = json.loads(path.read_text())
                key = OverrideKey(doc["function"], doc["shape_kind"])
                model = dmp.DMPModel.from_dict(doc["model"])
                events = tuple(GripperEvent(float(f), a)
                               for f, a in doc.get("gripper_events", []))
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ConfigError(f"bad override file {path}: {exc}") from exc
            self.put(key, model, events)
            count += 1
        return count


@dataclass
class TeleopSession:
    """One in-progress demonstration recording."""

    context: OverrideKey
    target_label: str | None = None
    session_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    state: str = "recording"  # recording | finalized | aborted
    times: list[float] = field(default_factory=list)
    points: list[tuple[float, ...]] = field(default_factory=list)
    gripper_marks: list[tuple[float, str]] = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def append_sample(self, pose, t: float, gripper_event: str | None = None) -> None:
        if self.state != "recording":
            raise SessionClosedError(f"session {self.session_id} is {self.state}")
        if self.times and t <= self.times[-1]:
            raise RejectedSampleError(
                f"sample at t={t} not after t={self.times[-1]}"
            )
        pose = tuple(float(v) for v in np.atleast_1d(pose))
        if self.points and len(pose) != len(self.points[0]):
            raise RejectedSampleError("sample DOF count changed mid-recording")
        self.times.append(float(t))
        self.points.append(pose)
        if gripper_event is not None:
            if gripper_event not in GRIPPER_ACTIONS:
                raise RejectedSampleError(f"unknown gripper event {gripper_event!r}")
            self.gripper_marks.append((float(t), gripper_event))


class CorrectionManager:
    """Owns teleop sessions and feeds finished ones into the registry."""

    def __init__(self):
        self._open: dict[OverrideKey, TeleopSession] = {}
        self._lock = threading.Lock()

    def begin_session(self, context: OverrideKey,
                      target_label: str | None = None) -> TeleopSession:
        with self._lock:
            existing = self._open.get(context)
            if existing is not None and existing.state == "recording":
                raise SessionConflictError(
                    f"session {existing.session_id} already recording for "
                    f"{context.function} x {context.shape_kind}"
                )
            session = TeleopSession(context=context, target_label=target_label)
            self._open[context] = session
            return session

    def abort(self, session: TeleopSession) -> None:
        if session.state == "recording":
            session.state = "aborted"
        with self._lock:
            if self._open.get(session.context) is session:
                del self._open[session.context]

    def finalize_and_fit(self, session: TeleopSession,
                         config: dmp.DMPConfig | None = None,
                         registry: OverrideRegistry | None = None) -> dmp.DMPModel:
        """Fit the recording and (optionally) register it.

        Too-few samples leave the session recording so the operator can
        continue; a diverged fit aborts it and leaves the registry
        untouched.
        """
        if session.state != "recording":
            raise SessionClosedError(f"session {session.session_id} is {session.state}")
        if session.n_samples < 3:
            raise InsufficientDataError(
                f"need at least 3 samples, got {session.n_samples}"
            )
        demo = dmp.Trajectory(np.array(session.times), np.array(session.points))
        try:
            model = dmp.fit_dmp(demo, config)
            if not np.isfinite(model.w).all():
                raise FitFailedError("non-finite weights")
        except (FitFailedError, DivergenceError) as exc:
            session.state = "aborted"
            with self._lock:
                self._open.pop(session.context, None)
            raise FitFailedError(str(exc)) from exc

        t0, t1 = session.times[0], session.times[-1]
        events = tuple(
            GripperEvent(min(max((t - t0) / (t1 - t0), 0.0), 1.0), action)
            for t, action in session.gripper_marks
        )
        session.state = "finalized"
        with self._lock:
            self._open.pop(session.context, None)
        if registry is not None:
            registry.put(session.context, model, events)
        return model


@dataclass(frozen=True)
class OverrideMotion:
    """A resolved replacement motion: the trajectory to follow plus the
    gripper events mapped onto its time axis."""

    trajectory: dmp.Trajectory
    gripper_times: tuple[tuple[float, str], ...]


def resolve_override(call, registry: OverrideRegistry | None,
                     current_pose, target_pose, shape: ObjectShape,
                     target_yaw: float = 0.0) -> OverrideMotion | None:
    """Replacement motion for a bound step, or None for the default path.

    The learned primitive is replayed from the robot's current position
    to the grasp point of the target's *present* pose, at its recorded
    duration; divergence is reported as OverrideFailedError so the
    executor can fail the step instead of crashing.
    """
    if registry is None or call.target_label is None:
        return None
    entry = registry.get(OverrideKey(call.name, shape.kind))
    if entry is None:
        return None
    goal = grasp_point(shape, np.asarray(target_pose, dtype=float), target_yaw)
    start = np.asarray(current_pose, dtype=float)
    model = entry.model
    if model.dof != len(start):
        raise OverrideFailedError(
            f"override has {model.dof} DOFs, world needs {len(start)}"
        )
    tau = model.tau
    try:
        trajectory = dmp.rollout_dmp(model, y0=start, g=goal, tau=tau,
                                     dt=tau / dmp.ROLLOUT_STEPS_PER_TAU)
    except DivergenceError as exc:
        raise OverrideFailedError(str(exc)) from exc
    gripper_times = tuple((event.fraction * tau, event.action)
                          for event in entry.gripper_events)
    return OverrideMotion(trajectory, gripper_times)
