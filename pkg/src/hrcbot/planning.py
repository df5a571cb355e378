"""Hierarchical task planning over a pluggable language-model backend.

Commands resolve to motion-function sequences through at most three
layers: a long-horizon command decomposes into short-horizon subtasks,
each of which decomposes into motion functions.  A plan needing more
than 10 functions is a first-layer (decomposed) plan; anything else is
second-layer and planned directly.

Backends: a deterministic stub driven by a template table (with a
configurable probability of emitting a corrupted response, modeling
language-model randomness), and a remote HTTP backend for plugging in a
real model service.
"""

from __future__ import annotations

import json
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import requests

from .errors import (
    BackendUnavailableError,
    ConfigError,
    PlanFailedError,
    StructureError,
    UnexecutableLabelError,
    UnknownCommandError,
)
from .perception import ObjectRegistry
from .world import MOTION_FUNCTIONS, OBJECT_DIRECTED

# A second-layer plan has at most this many motion functions; anything
# larger must arrive decomposed ("more than 10" => first layer; exactly
# 10 is kept in the second layer for a single clean boundary).
SECOND_LAYER_MAX = 10

_CALL_RE = re.compile(r"^\s*([a-z_][a-z0-9_]*)\s*(?:\(\s*([^)]*)\s*\))?\s*$")
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_PART_RE = re.compile(r"^(.*) \(part (\d+)\)$")


@dataclass(frozen=True)
class MotionFunctionCall:
    """One atomic robot action with its target binding."""

    name: str
    target_label: str | None = None
    literal_args: tuple[float, ...] = ()

    def __post_init__(self):
        if self.name not in MOTION_FUNCTIONS:
            raise ConfigError(f"unknown motion function {self.name!r}")
        if self.name in OBJECT_DIRECTED and not self.target_label:
            raise ConfigError(f"{self.name} requires a target label")
        if self.name == "move_to" and not self.target_label \
                and len(self.literal_args) != 2:
            raise ConfigError("move_to requires a label or an (x, y) literal")

    def text(self) -> str:
        if self.target_label:
            return f"{self.name}({self.target_label})"
        if self.literal_args:
            return f"{self.name}({', '.join(repr(a) for a in self.literal_args)})"
        return self.name

    def to_dict(self) -> dict:
        return {"name": self.name, "target": self.target_label,
                "args": list(self.literal_args)}


def parse_call(line: str) -> MotionFunctionCall:
    """Parse `name`, `name(label)` or `name(x, y)` into a call."""
    m = _CALL_RE.match(line)
    if not m:
        raise ConfigError(f"unparseable motion function line {line!r}")
    name, rawargs = m.group(1), m.group(2)
    if rawargs is None or rawargs.strip() == "":
        return MotionFunctionCall(name)
    parts = [p.strip() for p in rawargs.split(",")]
    if all(_NUMBER_RE.match(p) for p in parts):
        return MotionFunctionCall(name, literal_args=tuple(float(p) for p in parts))
    if len(parts) != 1:
        raise ConfigError(f"expected one label or numeric args, got {line!r}")
    return MotionFunctionCall(name, target_label=parts[0])


@dataclass(frozen=True)
class MalformedResponse:
    """A backend response that failed to parse or validate; carries the
    raw lines for diagnostics.  This is a value, not an exception."""

    raw: tuple[str, ...]
    reason: str


@dataclass(frozen=True)
class Subtask:
    """Named group of functions; second-layer plans hold exactly one
    unnamed group."""

    text: str | None
    functions: tuple[MotionFunctionCall, ...]


@dataclass(frozen=True)
class TaskPlan:
    command: str
    layer: str  # "first" | "second"
    subtasks: tuple[Subtask, ...]
    total_functions: int

    def __post_init__(self):
        if self.layer not in ("first", "second"):
            raise ConfigError(f"bad layer {self.layer!r}")
        if not self.subtasks or any(not s.functions for s in self.subtasks):
            raise ConfigError("plans need non-empty subtask function lists")
        total = sum(len(s.functions) for s in self.subtasks)
        if total != self.total_functions:
            raise ConfigError("total_functions does not match subtasks")
        if (self.layer == "first") != (total > SECOND_LAYER_MAX):
            raise ConfigError("layer does not match the function-count law")
        if self.layer == "second" and (
            len(self.subtasks) != 1 or self.subtasks[0].text is not None
        ):
            raise ConfigError("second-layer plans have one unnamed subtask")

    def flattened(self) -> tuple[MotionFunctionCall, ...]:
        return tuple(fn for s in self.subtasks for fn in s.functions)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "layer": self.layer,
            "total_functions": self.total_functions,
            "subtasks": [
                {"text": s.text, "functions": [f.to_dict() for f in s.functions]}
                for s in self.subtasks
            ],
        }


@dataclass(frozen=True)
class BoundStep:
    call: MotionFunctionCall
    pose: tuple[float, float] | None  # resolved target position

    def to_dict(self) -> dict:
        d = self.call.to_dict()
        d["pose"] = list(self.pose) if self.pose is not None else None
        return d


@dataclass(frozen=True)
class Program:
    steps: tuple[BoundStep, ...]
    provenance: str

    def to_dict(self) -> dict:
        return {"provenance": self.provenance,
                "steps": [s.to_dict() for s in self.steps]}


# ---------------------------------------------------------------------------
# Backends

TableEntry = dict  # {"functions": [...]} or {"subtasks": [...]}


def _reject_duplicate_keys(pairs):
    d = {}
    for k, v in pairs:
        if k in d:
            raise ConfigError(f"duplicate command pattern {k!r}")
        d[k] = v
    return d


def load_table(path: str | Path) -> dict[str, TableEntry]:
    """Template table file: JSON or TOML mapping a lowercase command
    pattern to {"functions": [...]} or {"subtasks": [...]}."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            doc = tomllib.loads(path.read_text())
        else:
            doc = json.loads(path.read_text(),
                             object_pairs_hook=_reject_duplicate_keys)
    except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read template table {path}: {exc}") from exc
    return normalize_table(doc)


def normalize_table(doc: dict) -> dict[str, TableEntry]:
    table = {}
    for pattern, entry in doc.items():
        key = pattern.strip().lower()
        if key in table:
            raise ConfigError(f"duplicate command pattern {key!r}")
        if not isinstance(entry, dict) or (
            ("functions" in entry) == ("subtasks" in entry)
        ):
            raise ConfigError(
                f"table entry for {key!r} needs exactly one of functions/subtasks"
            )
        table[key] = entry
    return table


class StubBackend:
    """Deterministic template-table planner with adjustable unreliability.

    With probability `error_probability` a request returns a corrupted
    whole response (an unknown function name, a dropped target, or a
    blanked subtask) instead of the table content.  The RNG is passed
    per call so concurrent trials never share generator state.
    """

    kind = "stub"

    def __init__(self, table: dict[str, TableEntry],
                 error_probability: float = 0.0, seed: int | None = None):
        if not 0.0 <= error_probability <= 1.0:
            raise ConfigError("error_probability must be in [0, 1]")
        self.table = normalize_table(table)
        self.error_probability = error_probability
        self._rng = np.random.default_rng(seed)

    def _entry(self, command: str):
        key = command.strip().lower()
        entry = self.table.get(key)
        if entry is not None:
            return key, entry
        m = _PART_RE.match(key)
        if m:
            base, part = m.group(1), int(m.group(2))
            base_entry = self.table.get(base)
            if base_entry is not None and "functions" in base_entry:
                chunks = chunk_functions(base_entry["functions"])
                if 1 <= part <= len(chunks):
                    return key, {"functions": chunks[part - 1]}
        raise UnknownCommandError(command)

    def request(self, command: str, decompose: bool = False,
                rng: np.random.Generator | None = None,
                corruptible: bool = True,
                ) -> Union[list[MotionFunctionCall], list[str], MalformedResponse]:
        """Answer one planning request.

        decompose=True asks for subtasks; a functions-only entry larger
        than the second-layer budget is then chunked into synthetic
        parts that this backend can itself expand.
        """
        if not command or not command.strip():
            raise ConfigError("command must be non-empty")
        rng = rng if rng is not None else self._rng
        key, entry = self._entry(command)

        if corruptible and self.error_probability > 0 \
                and rng.random() < self.error_probability:
            return self._corrupt(entry, rng)

        if decompose:
            if "subtasks" in entry:
                return list(entry["subtasks"])
            functions = entry["functions"]
            if len(functions) > SECOND_LAYER_MAX:
                return [f"{key} (part {i + 1})"
                        for i in range(len(chunk_functions(functions)))]
            # nothing to decompose; fall through to the direct answer
        if "subtasks" in entry:
            return list(entry["subtasks"])
        return _parse_function_lines(entry["functions"])

    def _corrupt(self, entry: TableEntry, rng: np.random.Generator) -> MalformedResponse:
        """Produce the whole-response corruption for this request."""
        if "subtasks" in entry:
            lines = list(entry["subtasks"])
            idx = int(rng.integers(len(lines)))
            lines[idx] = ""
            return MalformedResponse(tuple(lines), "blank subtask in response")
        lines = list(entry["functions"])
        idx = int(rng.integers(len(lines)))
        if rng.integers(2) == 0:
            lines[idx] = re.sub(r"^[a-z_][a-z0-9_]*", "sweep_arm", lines[idx])
            reason = "unknown function name in response"
        else:
            lines[idx] = re.sub(r"\(.*\)", "()", lines[idx])
            reason = "missing target in response"
        return MalformedResponse(tuple(lines), reason)


def chunk_functions(lines: Sequence[str]) -> list[list[str]]:
    """Split an oversized function list into contiguous chunks no larger
    than the second-layer budget, order preserved."""
    n_chunks = -(-len(lines) // SECOND_LAYER_MAX)
    return [list(chunk) for chunk in np.array_split(list(lines), n_chunks)]


def _parse_function_lines(lines) -> Union[list[MotionFunctionCall], MalformedResponse]:
    calls = []
    for line in lines:
        try:
            calls.append(parse_call(line))
        except ConfigError as exc:
            return MalformedResponse(tuple(lines), str(exc))
    if not calls:
        return MalformedResponse(tuple(lines), "empty function list")
    return calls


class RemoteBackend:
    """HTTP planner backend: one POST per request, a line-oriented reply.

    The reply is either newline-separated `function(target)` lines or a
    `SUBTASKS:` header followed by one subtask per line.
    """

    kind = "remote"

    def __init__(self, endpoint: str, prompt: str = "", timeout: float = 10.0):
        if not endpoint:
            raise ConfigError("remote backend needs an endpoint URL")
        self.endpoint = endpoint
        self.prompt = prompt
        self.timeout = timeout

    def request(self, command: str, decompose: bool = False,
                rng=None, corruptible: bool = True,
                ) -> Union[list[MotionFunctionCall], list[str], MalformedResponse]:
        if not command or not command.strip():
            raise ConfigError("command must be non-empty")
        body = {"prompt": self.prompt, "command": command,
                "mode": "decompose" if decompose else "plan"}
        try:
            resp = requests.post(self.endpoint, json=body, timeout=self.timeout)
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise BackendUnavailableError(f"{self.endpoint}: {exc}") from exc
        lines = [ln.strip() for ln in resp.text.splitlines() if ln.strip()]
        if not lines:
            return MalformedResponse((), "empty response")
        if lines[0].upper() == "SUBTASKS:":
            subtasks = lines[1:]
            if not subtasks:
                return MalformedResponse(tuple(lines), "no subtasks after header")
            return subtasks
        return _parse_function_lines(lines)


PlanBackend = Union[StubBackend, RemoteBackend]


def make_backend(spec: dict) -> PlanBackend:
    """Backend from a config mapping ({"kind": "stub", ...} or
    {"kind": "remote", ...}); table may be inline or a file path."""
    kind = spec.get("kind", "stub")
    if kind == "stub":
        table = spec.get("table")
        if isinstance(table, (str, Path)):
            table = load_table(table)
        elif table is None:
            raise ConfigError("stub backend needs a template table")
        return StubBackend(table, spec.get("error_probability", 0.0),
                           spec.get("seed"))
    if kind == "remote":
        return RemoteBackend(spec["endpoint"], spec.get("prompt", ""),
                             spec.get("timeout", 10.0))
    raise ConfigError(f"unknown backend kind {kind!r}")


# ---------------------------------------------------------------------------
# Plan construction


def request_functions(command: str, backend: PlanBackend,
                      decompose: bool = False,
                      rng: np.random.Generator | None = None,
                      corruptible: bool = True):
    """One backend round-trip; see PlanBackend.request for the contract."""
    return backend.request(command, decompose=decompose, rng=rng,
                           corruptible=corruptible)


def build_plan(command: str, backend: PlanBackend,
               rng: np.random.Generator | None = None) -> TaskPlan:
    """Turn a command into a validated TaskPlan.

    Corruption is drawn once per plan (on the opening request): a trial
    either gets a clean plan or fails planning outright, which keeps the
    plan-failure rate equal to the backend's error probability
    regardless of how many follow-up requests the hierarchy needs.
    """
    if not command or not command.strip():
        raise ConfigError("command must be non-empty")
    response = request_functions(command, backend, rng=rng)
    if isinstance(response, MalformedResponse):
        raise PlanFailedError(command, response.reason)

    if not isinstance(response[0], str):
        # direct function list
        if len(response) <= SECOND_LAYER_MAX:
            return TaskPlan(command, "second",
                            (Subtask(None, tuple(response)),), len(response))
        response = request_functions(command, backend, decompose=True,
                                     rng=rng, corruptible=False)
        if isinstance(response, MalformedResponse):
            raise PlanFailedError(command, response.reason)
        if response and not isinstance(response[0], str):
            raise StructureError(
                f"{command!r}: oversized plan did not decompose into subtasks"
            )

    subtasks = []
    for text in response:
        sub = request_functions(text, backend, rng=rng, corruptible=False)
        if isinstance(sub, MalformedResponse):
            raise PlanFailedError(command, f"subtask {text!r}: {sub.reason}")
        if sub and isinstance(sub[0], str):
            raise StructureError(
                f"subtask {text!r} decomposed again; only one level is allowed"
            )
        subtasks.append(Subtask(text, tuple(sub)))

    total = sum(len(s.functions) for s in subtasks)
    if total > SECOND_LAYER_MAX:
        return TaskPlan(command, "first", tuple(subtasks), total)
    # a short decomposition collapses into a single second-layer group
    flat = tuple(fn for s in subtasks for fn in s.functions)
    return TaskPlan(command, "second", (Subtask(None, flat),), total)


def assemble_program(plan: TaskPlan, registry: ObjectRegistry,
                     provenance: str | None = None) -> Program:
    """Bind every step's target against the registry, in plan order.

    Any label the perception layer never registered makes the plan
    unexecutable in this environment.
    """
    steps = []
    for call in plan.flattened():
        pose = None
        if call.target_label is not None:
            found = registry.lookup(call.target_label)
            if found is None:
                raise UnexecutableLabelError(call.target_label)
            pose = (found[0], found[1])
        elif len(call.literal_args) >= 2:
            pose = (call.literal_args[0], call.literal_args[1])
        steps.append(BoundStep(call, pose))
    return Program(tuple(steps), provenance or plan.command)
