"""Trial harness: repeated seeded runs per task, aggregated into
success-rate / executability / feasibility rows.

Exec counts trials whose plan could be carried out in the environment
at all; FSB is evaluated over the executed trials only, so it measures
motion quality independent of backend randomness.  SR is successes over
all trials, hence SR <= min(Exec, FSB) always.
"""

from __future__ import annotations

import io
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BackendUnavailableError,
    ConfigError,
    PlanFailedError,
    StructureError,
    UnexecutableLabelError,
    UnknownCommandError,
)
from .executor import GoalSpec, run_program
from .correction import OverrideRegistry
from .perception import DetectorConfig, ObjectRegistry, perception_cycle
from .planning import assemble_program, build_plan, make_backend
from .world import SceneSpec, load_scene


@dataclass(frozen=True)
class TrialOutcome:
    executed: bool
    feasible: bool
    success: bool
    functions_used: int
    seed: int

    def __post_init__(self):
        if self.success != (self.executed and self.feasible):
            raise ConfigError("success must equal executed AND feasible")


@dataclass(frozen=True)
class MetricsRow:
    task: str
    num: int
    fns: int
    sr: float
    exec_rate: float
    fsb: float

    def __post_init__(self):
        if self.sr > self.exec_rate + 1e-12 or self.sr > self.fsb + 1e-12:
            raise ConfigError("SR must not exceed Exec or FSB")

    def to_dict(self) -> dict:
        return {"task": self.task, "num": self.num, "fns": self.fns,
                "sr": self.sr, "exec": self.exec_rate, "fsb": self.fsb}


@dataclass(frozen=True)
class Experiment:
    """One task's trial definition."""

    task: str
    scene: SceneSpec
    goal: GoalSpec
    backend: dict
    detector: DetectorConfig = DetectorConfig()
    n: int = 20
    seed: int = 0
    name: str | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("trial count must be >= 1")
        if self.seed < 0:
            raise ConfigError("base seed must be non-negative")


def run_single_trial(experiment: Experiment, backend, trial_seed: int,
                     overrides: OverrideRegistry | None = None) -> TrialOutcome:
    rng_plan = np.random.default_rng([trial_seed, 0])
    rng_detect = np.random.default_rng([trial_seed, 1])
    world = experiment.scene.build_world()
    registry = ObjectRegistry()
    perception_cycle(world, registry, experiment.detector, world.clock, rng_detect)
    try:
        plan = build_plan(experiment.task, backend, rng=rng_plan)
        program = assemble_program(plan, registry)
    except (PlanFailedError, UnknownCommandError, StructureError,
            BackendUnavailableError, UnexecutableLabelError):
        return TrialOutcome(executed=False, feasible=False, success=False,
                            functions_used=0, seed=trial_seed)
    report = run_program(world, program, overrides, experiment.goal)
    return TrialOutcome(
        executed=report.executed,
        feasible=report.feasible,
        success=report.success,
        functions_used=report.functions_used,
        seed=trial_seed,
    )


def aggregate(task: str, outcomes: list[TrialOutcome]) -> MetricsRow:
    num = len(outcomes)
    if num == 0:
        raise ConfigError("cannot aggregate zero trials")
    executed = [o for o in outcomes if o.executed]
    successes = [o for o in outcomes if o.success]
    feasible_executed = sum(1 for o in executed if o.feasible)
    pool = successes if successes else outcomes
    counts = Counter(o.functions_used for o in pool)
    fns = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return MetricsRow(
        task=task,
        num=num,
        fns=fns,
        sr=len(successes) / num,
        exec_rate=len(executed) / num,
        fsb=feasible_executed / len(executed) if executed else 0.0,
    )


def run_trials(experiment: Experiment, n: int | None = None,
               base_seed: int | None = None,
               overrides: OverrideRegistry | None = None) -> MetricsRow:
    """n independent trials with derived seeds base_seed + i.

    Deterministic: identical (experiment, n, base_seed, overrides)
    reproduce the identical row.
    """
    n = experiment.n if n is None else n
    base_seed = experiment.seed if base_seed is None else base_seed
    if n < 1:
        raise ConfigError("trial count must be >= 1")
    backend = make_backend(experiment.backend)
    outcomes = [
        run_single_trial(experiment, backend, base_seed + i, overrides)
        for i in range(n)
    ]
    return aggregate(experiment.name or experiment.task, outcomes)


def run_suite(experiments: list[Experiment],
              overrides: OverrideRegistry | None = None) -> list[MetricsRow]:
    return [run_trials(exp, overrides=overrides) for exp in experiments]


# ---------------------------------------------------------------------------
# Suite files


def experiment_from_dict(doc: dict, base_dir: Path | None = None) -> Experiment:
    base_dir = base_dir or Path.cwd()
    try:
        scene_ref = doc["scene"]
        if isinstance(scene_ref, (str, Path)):
            scene = load_scene(_resolve(scene_ref, base_dir))
        else:
            from .world import scene_from_json
            scene = scene_from_json(scene_ref)
        backend = dict(doc.get("backend", {}))
        if isinstance(backend.get("table"), str):
            backend["table"] = str(_resolve(backend["table"], base_dir))
        detector = DetectorConfig(**doc.get("detector", {}))
        return Experiment(
            task=doc["task"],
            scene=scene,
            goal=GoalSpec.from_dict(doc["goal"]),
            backend=backend,
            detector=detector,
            n=int(doc.get("n", 20)),
            seed=int(doc.get("seed", 0)),
            name=doc.get("name"),
        )
    except KeyError as exc:
        raise ConfigError(f"experiment definition missing field {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"bad experiment definition: {exc}") from exc


def _resolve(ref: str | Path, base_dir: Path) -> Path:
    path = Path(ref)
    return path if path.is_absolute() else base_dir / path


def load_suite(path: str | Path) -> list[Experiment]:
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            doc = tomllib.loads(path.read_text())
        else:
            doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read suite file {path}: {exc}") from exc
    entries = doc.get("experiments", doc) if isinstance(doc, dict) else doc
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{path}: suite must define a non-empty experiment list")
    return [experiment_from_dict(entry, path.parent) for entry in entries]


# ---------------------------------------------------------------------------
# Reports


def render_report(rows: list[MetricsRow], fmt: str = "table") -> str:
    """Rates printed to two decimals; CSV round-trips losslessly at that
    precision."""
    if not rows:
        raise ConfigError("no rows to render")
    if fmt == "csv":
        lines = ["Task,Num,Fns,SR,Exec,FSB"]
        for r in rows:
            lines.append(f"{r.task},{r.num},{r.fns},"
                         f"{r.sr:.2f},{r.exec_rate:.2f},{r.fsb:.2f}")
        return "\n".join(lines) + "\n"
    if fmt == "table":
        width = max(len("Task"), *(len(r.task) for r in rows))
        out = io.StringIO()
        out.write(f"{'Task':<{width}}  {'Num':>4}  {'Fns':>4}  "
                  f"{'SR':>5}  {'Exec':>5}  {'FSB':>5}\n")
        out.write("-" * (width + 31) + "\n")
        for r in rows:
            out.write(f"{r.task:<{width}}  {r.num:>4}  {r.fns:>4}  "
                      f"{r.sr:>5.2f}  {r.exec_rate:>5.2f}  {r.fsb:>5.2f}\n")
        return out.getvalue()
    raise ConfigError(f"unknown report format {fmt!r}")


def parse_csv_report(text: str) -> list[MetricsRow]:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "Task,Num,Fns,SR,Exec,FSB":
        raise ConfigError("malformed metrics CSV header")
    rows = []
    for ln in lines[1:]:
        task, num, fns, sr, ex, fsb = ln.rsplit(",", 5)
        rows.append(MetricsRow(task=task, num=int(num), fns=int(fns),
                               sr=float(sr), exec_rate=float(ex), fsb=float(fsb)))
    return rows
