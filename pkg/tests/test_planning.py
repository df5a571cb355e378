"""Planner behavior: parsing, the stub backend and its corruption
model, hierarchy classification, and program assembly."""

import http.server
import threading

import numpy as np
import pytest

from hrcbot.errors import (
    BackendUnavailableError,
    ConfigError,
    PlanFailedError,
    StructureError,
    UnexecutableLabelError,
    UnknownCommandError,
)
from hrcbot.perception import Detection, ObjectRegistry
from hrcbot.planning import (
    MalformedResponse,
    MotionFunctionCall,
    RemoteBackend,
    StubBackend,
    Subtask,
    TaskPlan,
    assemble_program,
    build_plan,
    chunk_functions,
    parse_call,
    request_functions,
)


def register(reg: ObjectRegistry, label: str, x: float, y: float):
    reg.ingest([Detection(label=label, pose=(x, y, 0.0), confidence=1.0,
                          timestamp=0.0)])


class TestParseCall:
    def test_label_argument(self):
        call = parse_call("move_to(cup)")
        assert call.name == "move_to" and call.target_label == "cup"

    def test_numeric_arguments(self):
        call = parse_call("move_to(0.10, 0.40)")
        assert call.literal_args == (0.10, 0.40)
        assert call.target_label is None

    def test_bare_function(self):
        assert parse_call("release").name == "release"

    @pytest.mark.parametrize("line", [
        "sweep_arm(cup)",        # not in the catalog
        "grasp_default()",       # object-directed without target
        "move_to",               # needs label or coordinates
        "grasp_default(a, b)",   # two labels
        "???",
    ])
    def test_rejects_invalid_lines(self, line):
        with pytest.raises(ConfigError):
            parse_call(line)


class TestStubBackend:
    def test_catch_the_cup_decomposition(self, stub_table):
        backend = StubBackend(stub_table, error_probability=0.0)
        calls = backend.request("catch the cup")
        assert [c.text() for c in calls] == \
            ["move_to(cup)", "grasp_default(cup)", "lift(cup)"]

    def test_forced_error_path_is_malformed(self, stub_table):
        backend = StubBackend(stub_table, error_probability=1.0, seed=3)
        response = backend.request("catch the cup")
        assert isinstance(response, MalformedResponse)
        assert response.reason

    def test_long_horizon_command_returns_subtasks(self, stub_table):
        backend = StubBackend(stub_table, error_probability=0.0)
        subtasks = backend.request("clean the top of the cabinet")
        assert subtasks == ["catch the wiper", "wipe the cabinet top",
                            "put the wiper back"]

    def test_lookup_is_case_and_space_insensitive(self, stub_table):
        backend = StubBackend(stub_table)
        assert backend.request("  Catch The Cup ")

    def test_unknown_command(self, stub_table):
        backend = StubBackend(stub_table)
        with pytest.raises(UnknownCommandError):
            backend.request("juggle the flamingo")

    def test_empty_command_rejected(self, stub_table):
        backend = StubBackend(stub_table)
        with pytest.raises(ConfigError):
            backend.request("   ")

    def test_corruption_modes_cover_name_and_target(self, stub_table):
        backend = StubBackend(stub_table, error_probability=1.0)
        reasons = set()
        for seed in range(30):
            r = backend.request("catch the cup", rng=np.random.default_rng(seed))
            reasons.add(r.reason)
        assert "unknown function name in response" in reasons
        assert "missing target in response" in reasons


class TestBuildPlan:
    def test_short_horizon_is_second_layer(self, stub_table):
        backend = StubBackend(stub_table)
        plan = build_plan("open the drawer", backend)
        assert plan.layer == "second"
        assert 2 <= plan.total_functions <= 4
        assert len(plan.subtasks) == 1 and plan.subtasks[0].text is None

    def test_long_horizon_is_first_layer(self, stub_table):
        backend = StubBackend(stub_table)
        plan = build_plan("clean the top of the cabinet", backend)
        assert plan.layer == "first"
        assert len(plan.subtasks) == 3
        assert plan.total_functions > 10

    def test_empty_command_rejected(self, stub_table):
        with pytest.raises(ConfigError):
            build_plan("", StubBackend(stub_table))

    def test_corrupted_response_fails_planning(self, stub_table):
        backend = StubBackend(stub_table, error_probability=1.0, seed=0)
        with pytest.raises(PlanFailedError):
            build_plan("catch the cup", backend)

    def test_oversized_function_list_gets_decomposed(self):
        lines = [f"move_to({0.1 + i * 0.01:.2f}, 0.2)" for i in range(14)]
        backend = StubBackend({"long chore": {"functions": lines}})
        plan = build_plan("long chore", backend)
        assert plan.layer == "first"
        assert plan.total_functions == 14
        assert [c.text() for c in plan.flattened()] == \
            [parse_call(l).text() for l in lines]
        assert all(len(s.functions) <= 10 for s in plan.subtasks)

    def test_short_decomposition_collapses_to_second_layer(self):
        table = {
            "tidy up": {"subtasks": ["step one", "step two"]},
            "step one": {"functions": ["move_to(0.1, 0.1)", "release"]},
            "step two": {"functions": ["move_to(0.2, 0.2)"]},
        }
        plan = build_plan("tidy up", StubBackend(table))
        assert plan.layer == "second"
        assert plan.total_functions == 3
        assert len(plan.subtasks) == 1

    def test_nested_decomposition_is_a_structure_error(self):
        table = {
            "outer": {"subtasks": ["inner"]},
            "inner": {"subtasks": ["leaf"]},
            "leaf": {"functions": ["release"]},
        }
        with pytest.raises(StructureError):
            build_plan("outer", StubBackend(table))

    def test_deterministic_given_seed(self, stub_table):
        backend = StubBackend(stub_table, error_probability=0.5)
        plans = []
        for _ in range(2):
            rng = np.random.default_rng(123)
            try:
                plans.append(build_plan("catch the cup", backend, rng=rng).to_dict())
            except PlanFailedError as exc:
                plans.append(str(exc))
        assert plans[0] == plans[1]

    def test_plan_failure_rate_matches_error_probability(self, stub_table):
        # one corruption draw per plan, even for multi-request hierarchies
        p, n = 0.2, 2000
        backend = StubBackend(stub_table, error_probability=p)
        failures = 0
        for i in range(n):
            try:
                build_plan("clean the top of the cabinet", backend,
                           rng=np.random.default_rng(i))
            except PlanFailedError:
                failures += 1
        sigma = (n * p * (1 - p)) ** 0.5
        assert abs(failures - n * p) <= 3 * sigma


class TestTaskPlanInvariants:
    def test_layer_law_enforced(self):
        calls = tuple(parse_call("release") for _ in range(3))
        with pytest.raises(ConfigError):
            TaskPlan("x", "first", (Subtask("a", calls),), 3)

    def test_total_must_match(self):
        calls = (parse_call("release"),)
        with pytest.raises(ConfigError):
            TaskPlan("x", "second", (Subtask(None, calls),), 5)

    def test_second_layer_shape(self):
        calls = (parse_call("release"),)
        with pytest.raises(ConfigError):
            TaskPlan("x", "second", (Subtask("named", calls),), 1)


class TestAssembleProgram:
    def test_binds_registered_pose(self, stub_table):
        reg = ObjectRegistry()
        register(reg, "cup", 0.4, 0.2)
        plan = build_plan("catch the cup", StubBackend(stub_table))
        program = assemble_program(plan, reg)
        assert program.steps[0].pose == (0.4, 0.2)
        assert len(program.steps) == plan.total_functions

    def test_unregistered_label_is_unexecutable(self):
        table = {"fetch the unicorn": {"functions": ["move_to(unicorn)",
                                                     "grasp_default(unicorn)"]}}
        plan = build_plan("fetch the unicorn", StubBackend(table))
        with pytest.raises(UnexecutableLabelError) as err:
            assemble_program(plan, ObjectRegistry())
        assert err.value.label == "unicorn"

    def test_catch_the_bowl_three_bound_steps(self, stub_table):
        reg = ObjectRegistry()
        register(reg, "bowl", 0.5, 0.25)
        plan = build_plan("catch the bowl", StubBackend(stub_table))
        program = assemble_program(plan, reg)
        assert len(program.steps) == 3
        assert all(s.pose == (0.5, 0.25) for s in program.steps)

    def test_order_and_count_preserved(self, stub_table):
        reg = ObjectRegistry()
        for label, x, y in [("cup", 0.35, 0.2), ("tray", 0.55, 0.1)]:
            register(reg, label, x, y)
        plan = build_plan("put the cup on the tray", StubBackend(stub_table))
        program = assemble_program(plan, reg)
        assert [s.call.name for s in program.steps] == \
            [c.name for c in plan.flattened()]

    def test_literal_move_binds_from_args(self):
        table = {"park": {"functions": ["move_to(0.10, 0.10)"]}}
        plan = build_plan("park", StubBackend(table))
        program = assemble_program(plan, ObjectRegistry())
        assert program.steps[0].pose == (0.10, 0.10)


class _CannedHandler(http.server.BaseHTTPRequestHandler):
    body = b"move_to(cup)\ngrasp_default(cup)\n"

    def do_POST(self):
        self.rfile.read(int(self.headers.get("Content-Length", 0)))
        self.send_response(200)
        self.end_headers()
        self.wfile.write(type(self).body)

    def log_message(self, *args):
        pass


@pytest.fixture
def canned_server():
    server = http.server.HTTPServer(("127.0.0.1", 0), _CannedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/plan", _CannedHandler
    server.shutdown()


class TestRemoteBackend:
    def test_parses_function_lines(self, canned_server):
        url, handler = canned_server
        handler.body = b"move_to(cup)\ngrasp_default(cup)\n"
        backend = RemoteBackend(url, timeout=5.0)
        calls = backend.request("catch the cup")
        assert [c.text() for c in calls] == ["move_to(cup)", "grasp_default(cup)"]

    def test_parses_subtask_header(self, canned_server):
        url, handler = canned_server
        handler.body = b"SUBTASKS:\nfirst part\nsecond part\n"
        backend = RemoteBackend(url)
        assert backend.request("big job") == ["first part", "second part"]

    def test_unparseable_line_is_malformed(self, canned_server):
        url, handler = canned_server
        handler.body = b"move_to(cup)\n!!nonsense!!\n"
        backend = RemoteBackend(url)
        assert isinstance(backend.request("catch the cup"), MalformedResponse)

    def test_unreachable_endpoint(self):
        backend = RemoteBackend("http://127.0.0.1:1/plan", timeout=0.2)
        with pytest.raises(BackendUnavailableError):
            backend.request("catch the cup")


class TestChunking:
    def test_chunks_are_contiguous_and_bounded(self):
        lines = [f"move_to(0.{i:02d}, 0.1)" for i in range(23)]
        chunks = chunk_functions(lines)
        assert [l for chunk in chunks for l in chunk] == lines
        assert all(len(chunk) <= 10 for chunk in chunks)
        assert len(chunks) == 3


class TestRequestFunctions:
    def test_dispatches_to_backend(self, stub_table):
        backend = StubBackend(stub_table)
        calls = request_functions("catch the box", backend)
        assert isinstance(calls[0], MotionFunctionCall)
