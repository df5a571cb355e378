"""Desk-scale human-robot collaboration: language commands are planned
into motion-function programs, executed on a simulated robot, and
corrected through operator-demonstrated movement primitives."""

from .dmp import (
    DMPConfig,
    DMPModel,
    DynamicMovementPrimitive,
    Trajectory,
    canonical_phase,
    fit_dmp,
    forcing_term,
    rollout_dmp,
)
from .correction import (
    CorrectionManager,
    OverrideKey,
    OverrideRegistry,
    TeleopSession,
    resolve_override,
)
from .executor import ExecutionReport, GoalSpec, StepResult, run_program, step_function
from .metrics import Experiment, MetricsRow, TrialOutcome, render_report, run_trials
from .perception import Detection, DetectorConfig, ObjectRegistry, detect
from .planning import (
    MotionFunctionCall,
    Program,
    StubBackend,
    TaskPlan,
    assemble_program,
    build_plan,
)
from .world import ObjectShape, SceneObject, WorldState, grasp_feasibility, load_scene

__version__ = "0.1.0"
