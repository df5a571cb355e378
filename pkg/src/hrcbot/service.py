"""HTTP + streaming service tying planner, perception, executor,
correction and metrics into one supervised session.

The human stays in the loop: a submitted command is planned and parked
for approval, never auto-executed.  Approval executes and streams step
results; a failing step can be corrected by switching to teleoperation,
demonstrating the motion, and retrying.  All state changes serialize
through a single session and are observable on the ND-JSON event stream
(`world_snapshot`, `step_result`, `plan_ready`, `report`, `error`).
"""

from __future__ import annotations

import json
import os
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import metrics as metrics_mod
from .correction import CorrectionManager, OverrideKey, OverrideRegistry
from .dmp import DMPConfig
from .errors import (
    ConfigError,
    FitFailedError,
    HrcError,
    InsufficientDataError,
    PlanFailedError,
    RejectedSampleError,
    SessionClosedError,
    SessionConflictError,
    StructureError,
    UnexecutableLabelError,
    UnknownCommandError,
)
from .executor import run_program, step_function, OK, UNEXECUTABLE
from .perception import DetectorConfig, ObjectRegistry, perception_cycle
from .planning import TaskPlan, assemble_program, build_plan, make_backend
from .resources import DEFAULT_SCENE, DEFAULT_SUITE, DEFAULT_TABLE
from .world import SIM_TICK, WorldState, load_scene

MODES = ("idle", "planning", "awaiting_approval", "executing", "teleop", "reporting")
SNAPSHOT_EVERY_TICKS = 5  # 50 ms of sim time, 20 Hz


class ModeError(HrcError):
    """Request illegal in the current session mode."""


@dataclass
class ServiceConfig:
    scene: str | Path = DEFAULT_SCENE
    table: str | Path = DEFAULT_TABLE
    backend: str = "stub"
    error_probability: float = 0.0
    remote_url: str | None = None
    remote_timeout: float = 10.0
    seed: int = 0
    realtime: bool = False
    detector: dict = field(default_factory=dict)
    override_dir: str | None = None
    ui_dir: str | None = None
    host: str = "127.0.0.1"
    port: int = 8075

    @classmethod
    def load(cls, path: str | Path | None = None, env=os.environ,
             **overrides) -> "ServiceConfig":
        """File < environment < explicit overrides."""
        doc: dict = {}
        if path is not None:
            try:
                doc = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
        mapping = {
            "HRC_SCENE": ("scene", str), "HRC_TABLE": ("table", str),
            "HRC_BACKEND": ("backend", str),
            "HRC_ERROR_PROBABILITY": ("error_probability", float),
            "HRC_REMOTE_URL": ("remote_url", str),
            "HRC_SEED": ("seed", int),
            "HRC_REALTIME": ("realtime", lambda v: v.lower() in ("1", "true", "yes")),
            "HRC_OVERRIDE_DIR": ("override_dir", str),
            "HRC_UI_DIR": ("ui_dir", str),
            "HRC_HOST": ("host", str), "HRC_PORT": ("port", int),
        }
        for var, (key, cast) in mapping.items():
            if var in env:
                doc[key] = cast(env[var])
        doc.update({k: v for k, v in overrides.items() if v is not None})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


class Broadcaster:
    """Fan-out of JSON events to any number of stream subscribers."""

    def __init__(self, maxsize: int = 2000):
        self._subs: dict[int, queue.Queue] = {}
        self._lock = threading.Lock()
        self._next = 0
        self._maxsize = maxsize

    def subscribe(self) -> tuple[int, queue.Queue]:
        with self._lock:
            sid = self._next
            self._next += 1
            q: queue.Queue = queue.Queue(self._maxsize)
            self._subs[sid] = q
            return sid, q

    def unsubscribe(self, sid: int) -> None:
        with self._lock:
            self._subs.pop(sid, None)

    def publish(self, event: dict) -> None:
        line = json.dumps(event)
        with self._lock:
            targets = list(self._subs.values())
        for q in targets:
            try:
                q.put_nowait(line)
            except queue.Full:
                pass  # slow subscriber loses events rather than blocking the sim


class HrcSession:
    """The single robot/operator session behind the API."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.scene = load_scene(config.scene)
        self.world: WorldState = self.scene.build_world()
        self.registry = ObjectRegistry()
        self.overrides = OverrideRegistry()
        if config.override_dir and Path(config.override_dir).is_dir():
            self.overrides.load_dir(config.override_dir)
        self.detector = DetectorConfig(**config.detector)
        self.rng = np.random.default_rng(config.seed)
        backend_spec = {"kind": config.backend}
        if config.backend == "stub":
            backend_spec.update(table=str(config.table),
                                error_probability=config.error_probability)
        else:
            backend_spec.update(endpoint=config.remote_url,
                                timeout=config.remote_timeout)
        self.backend = make_backend(backend_spec)
        self.broadcaster = Broadcaster()
        self.correction = CorrectionManager()
        self.mode = "idle"
        self._mode_lock = threading.RLock()
        self.plans: dict[str, TaskPlan] = {}
        self.active_plan_id: str | None = None
        self.teleop_session = None
        self._teleop_clock0 = 0.0
        self.latest_metrics: dict | None = None
        perception_cycle(self.world, self.registry, self.detector,
                         self.world.clock, self.rng)

    # -- mode machine ------------------------------------------------------

    def _transition(self, allowed: tuple[str, ...], to: str) -> None:
        with self._mode_lock:
            if self.mode not in allowed:
                raise ModeError(f"cannot do this while {self.mode}")
            self.mode = to

    def _set_mode(self, to: str) -> None:
        with self._mode_lock:
            self.mode = to

    # -- events ------------------------------------------------------------

    def publish(self, kind: str, **payload) -> None:
        self.broadcaster.publish({"kind": kind, **payload})

    def publish_snapshot(self) -> None:
        snap = self.world.snapshot()
        snap["mode"] = self.mode
        self.publish("world_snapshot", **snap)

    def _on_tick_factory(self):
        counter = {"n": 0}

        def on_tick(world):
            counter["n"] += 1
            if counter["n"] % SNAPSHOT_EVERY_TICKS == 0:
                self.publish_snapshot()
                if self.config.realtime:
                    time.sleep(SIM_TICK * SNAPSHOT_EVERY_TICKS)

        return on_tick

    # -- planning ----------------------------------------------------------

    def submit_command(self, text: str) -> tuple[str, TaskPlan]:
        self._transition(("idle",), "planning")
        try:
            plan = build_plan(text, self.backend, rng=self.rng)
        except (PlanFailedError, UnknownCommandError, StructureError,
                ConfigError) as exc:
            self._set_mode("idle")
            self.publish("error", where="planning", detail=str(exc))
            raise
        plan_id = uuid.uuid4().hex[:12]
        self.plans[plan_id] = plan
        self.active_plan_id = plan_id
        self._set_mode("awaiting_approval")
        self.publish("plan_ready", plan_id=plan_id, **plan.to_dict())
        return plan_id, plan

    def _take_plan(self, plan_id: str, to_mode: str) -> TaskPlan:
        with self._mode_lock:
            if plan_id not in self.plans or plan_id != self.active_plan_id:
                raise HTTPException(status_code=404, detail="plan not found")
            self._transition(("awaiting_approval",), to_mode)
            plan = self.plans.pop(plan_id)
            self.active_plan_id = None
            return plan

    def reject_plan(self, plan_id: str) -> None:
        self._take_plan(plan_id, "idle")
        self.publish("report", report_type="rejection", plan_id=plan_id)

    def approve_plan(self, plan_id: str) -> list[dict]:
        """Execute an approved plan; returns the event list that is also
        streamed as the response body (step results then the report)."""
        plan = self._take_plan(plan_id, "executing")
        events: list[dict] = []
        try:
            perception_cycle(self.world, self.registry, self.detector,
                             self.world.clock, self.rng)
            try:
                program = assemble_program(plan, self.registry, plan_id)
            except UnexecutableLabelError as exc:
                report = {
                    "kind": "report", "report_type": "execution",
                    "plan_id": plan_id, "executed": False, "feasible": False,
                    "success": False, "functions_used": 0,
                    "detail": str(exc), "steps": [],
                }
                self.publish("error", where="assembly", detail=str(exc))
                self.broadcaster.publish(report)
                return [report]

            on_tick = self._on_tick_factory()

            def on_step(index, step, result):
                event = {
                    "kind": "step_result", "plan_id": plan_id, "index": index,
                    "name": step.call.name, "target": step.call.target_label,
                    **result.to_dict(),
                }
                events.append(event)
                self.broadcaster.publish(event)

            report_obj = run_program(self.world, program, self.overrides,
                                     goal=None, on_tick=on_tick, on_step=on_step)
            self.publish_snapshot()
            report = {"kind": "report", "report_type": "execution",
                      "plan_id": plan_id, **report_obj.to_dict()}
            events.append(report)
            self.broadcaster.publish(report)
            return events
        finally:
            self._set_mode("idle")

    # -- teleoperation -----------------------------------------------------

    def begin_teleop(self, function: str, target_label: str | None,
                     shape_kind: str | None) -> dict:
        if shape_kind is None:
            obj = self.world.objects.get(target_label or "")
            if obj is None:
                raise HTTPException(
                    status_code=404,
                    detail=f"unknown object {target_label!r}; give shape_kind",
                )
            shape_kind = obj.shape.kind
        key = OverrideKey(function, shape_kind)
        self._transition(("idle", "reporting"), "teleop")
        try:
            self.teleop_session = self.correction.begin_session(key, target_label)
        except SessionConflictError:
            self._set_mode("idle")
            raise
        self._teleop_clock0 = self.world.clock
        self.publish_snapshot()
        return {
            "session_id": self.teleop_session.session_id,
            "function": function,
            "shape_kind": shape_kind,
        }

    def _require_teleop(self, session_id: str):
        with self._mode_lock:
            if self.mode != "teleop":
                raise ModeError("no teleoperation in progress")
            session = self.teleop_session
            if session is None or session.session_id != session_id:
                raise HTTPException(status_code=404, detail="unknown teleop session")
            return session

    def teleop_sample(self, session_id: str, t: float, x: float, y: float,
                      gripper: str | None) -> dict:
        session = self._require_teleop(session_id)
        session.append_sample((x, y), t, gripper)
        self.world.set_ee(self.world.clamp(np.array([x, y])))
        self.world.clock = self._teleop_clock0 + t
        self.publish_snapshot()
        return {"accepted": session.n_samples}

    def finish_teleop(self, session_id: str) -> dict:
        session = self._require_teleop(session_id)
        try:
            model = self.correction.finalize_and_fit(session, DMPConfig(),
                                                     self.overrides)
        except InsufficientDataError:
            raise  # still recording; the operator may keep sampling
        except FitFailedError as exc:
            self.teleop_session = None
            self._set_mode("idle")
            self.publish("error", where="teleop", detail=str(exc))
            raise
        self.teleop_session = None
        self._set_mode("idle")
        if self.config.override_dir:
            self.overrides.save_dir(self.config.override_dir)
        summary = {
            "function": session.context.function,
            "shape_kind": session.context.shape_kind,
            "tau": model.tau,
            "n_basis": model.n_basis,
            "samples": session.n_samples,
        }
        self.publish("report", report_type="override", **summary)
        return summary

    def abort_teleop(self, session_id: str) -> dict:
        session = self._require_teleop(session_id)
        self.correction.abort(session)
        self.teleop_session = None
        self._set_mode("idle")
        self.publish("report", report_type="teleop_abort", session_id=session_id)
        return {"aborted": session_id}

    # -- metrics -----------------------------------------------------------

    def run_metrics(self, suite: str | None, experiments: list | None) -> dict:
        self._transition(("idle",), "reporting")
        try:
            if suite:
                exps = metrics_mod.load_suite(suite)
            elif experiments:
                exps = [metrics_mod.experiment_from_dict(doc, Path.cwd())
                        for doc in experiments]
            else:
                exps = metrics_mod.load_suite(DEFAULT_SUITE)
            rows = metrics_mod.run_suite(exps, overrides=self.overrides)
            result = {
                "rows": [r.to_dict() for r in rows],
                "csv": metrics_mod.render_report(rows, "csv"),
            }
            self.latest_metrics = result
            self.publish("report", report_type="metrics", rows=result["rows"])
            return result
        finally:
            self._set_mode("idle")


# ---------------------------------------------------------------------------
# HTTP surface


class CommandRequest(BaseModel):
    text: str


class TeleopBeginRequest(BaseModel):
    function: str
    target_label: str | None = None
    shape_kind: str | None = None


class TeleopSampleRequest(BaseModel):
    session_id: str
    t: float
    x: float
    y: float
    gripper: str | None = None


class TeleopSessionRequest(BaseModel):
    session_id: str


class MetricsRunRequest(BaseModel):
    suite: str | None = None
    experiments: list | None = None


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    session = HrcSession(config)
    app = FastAPI(title="hrcbot", version="0.1.0")
    app.state.session = session

    @app.exception_handler(ModeError)
    def _mode_error(_req: Request, exc: ModeError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(SessionConflictError)
    def _conflict(_req: Request, exc: SessionConflictError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(HrcError)
    def _hrc_error(_req: Request, exc: HrcError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/")
    def root():
        return {
            "service": "hrcbot",
            "mode": session.mode,
            "objects": len(session.world.objects),
            "overrides": len(session.overrides),
        }

    @app.post("/command")
    def submit_command(body: CommandRequest):
        plan_id, plan = session.submit_command(body.text)
        return {"plan_id": plan_id, "plan": plan.to_dict()}

    @app.get("/plan/{plan_id}")
    def get_plan(plan_id: str):
        plan = session.plans.get(plan_id)
        if plan is None:
            raise HTTPException(status_code=404, detail="plan not found")
        return {"plan_id": plan_id, "plan": plan.to_dict(),
                "active": plan_id == session.active_plan_id}

    @app.post("/plan/{plan_id}/approve")
    def approve(plan_id: str):
        events = session.approve_plan(plan_id)

        def ndjson():
            for event in events:
                yield (json.dumps(event) + "\n").encode()

        return StreamingResponse(ndjson(), media_type="application/x-ndjson")

    @app.post("/plan/{plan_id}/reject")
    def reject(plan_id: str):
        session.reject_plan(plan_id)
        return {"rejected": plan_id, "mode": session.mode}

    @app.get("/registry")
    def registry():
        return session.registry.snapshot()

    @app.get("/overrides")
    def overrides():
        return session.overrides.snapshot()

    @app.get("/world")
    def world_view():
        snap = session.world.snapshot()
        snap["mode"] = session.mode
        return snap

    @app.post("/teleop/begin")
    def teleop_begin(body: TeleopBeginRequest):
        return session.begin_teleop(body.function, body.target_label,
                                    body.shape_kind)

    @app.post("/teleop/sample")
    def teleop_sample(body: TeleopSampleRequest):
        return session.teleop_sample(body.session_id, body.t, body.x, body.y,
                                     body.gripper)

    @app.post("/teleop/finish")
    def teleop_finish(body: TeleopSessionRequest):
        return session.finish_teleop(body.session_id)

    @app.post("/teleop/abort")
    def teleop_abort(body: TeleopSessionRequest):
        return session.abort_teleop(body.session_id)

    @app.post("/metrics/run")
    def metrics_run(body: MetricsRunRequest):
        return session.run_metrics(body.suite, body.experiments)

    @app.get("/metrics/latest")
    def metrics_latest():
        if session.latest_metrics is None:
            raise HTTPException(status_code=404, detail="no metrics run yet")
        return session.latest_metrics

    @app.get("/stream")
    def stream():
        sid, q = session.broadcaster.subscribe()
        session.publish_snapshot()  # new subscribers get the current state

        def lines():
            try:
                while True:
                    try:
                        line = q.get(timeout=0.5)
                    except queue.Empty:
                        yield b""  # keepalive lets disconnects surface
                        continue
                    yield (line + "\n").encode()
            finally:
                session.broadcaster.unsubscribe(sid)

        return StreamingResponse(lines(), media_type="application/x-ndjson")

    ui_dir = config.ui_dir
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend"
        if (candidate / "index.html").is_file():
            ui_dir = str(candidate)
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
