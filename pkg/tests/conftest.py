import sys
import threading
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hrcbot.metrics import experiment_from_dict
from hrcbot.planning import load_table
from hrcbot.resources import DATA_DIR, DEFAULT_SCENE, DEFAULT_TABLE
from hrcbot.world import load_scene


class LiveServer:
    """A real uvicorn server on a random loopback port; needed because
    the blocking test client buffers responses and so cannot consume the
    endless event stream."""

    def __init__(self, config=None):
        import uvicorn

        from hrcbot.service import ServiceConfig, create_app

        app = create_app(config or ServiceConfig(seed=3))
        self._server = uvicorn.Server(uvicorn.Config(
            app, host="127.0.0.1", port=0, log_level="warning", lifespan="off"))
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def __enter__(self) -> str:
        self._thread.start()
        deadline = time.time() + 15
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.02)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture
def live_server():
    with LiveServer() as base_url:
        yield base_url


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def stub_table() -> dict:
    return load_table(DEFAULT_TABLE)


@pytest.fixture
def desk_world():
    return load_scene(DEFAULT_SCENE).build_world()


def make_experiment(task: str, goal: dict, n: int = 20, seed: int = 7,
                    error_probability: float = 0.0,
                    detection_probability: float = 1.0,
                    noise_sigma: float = 0.0):
    """Deterministic trial definition on the packaged desk scene."""
    return experiment_from_dict({
        "task": task,
        "scene": "desk_scene.json",
        "goal": goal,
        "n": n,
        "seed": seed,
        "backend": {"kind": "stub", "table": "stub_table.json",
                    "error_probability": error_probability},
        "detector": {"detection_probability": detection_probability,
                     "position_noise_sigma": noise_sigma},
    }, DATA_DIR)


def bowl_experiment(n: int = 20, seed: int = 7, error_probability: float = 0.0):
    return make_experiment("catch the bowl", {"kind": "catch", "target": "bowl"},
                           n=n, seed=seed, error_probability=error_probability)


def scripted_drag(start, end, duration=2.0, samples=121, close_at=0.95):
    """Synthetic teleop demonstration: smooth rest-to-rest drag from
    start to end with a gripper-close event near the end.  Yields
    (t, x, y, gripper_event|None)."""
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    ts = np.linspace(0.0, duration, samples)
    s = 10 * (ts / duration) ** 3 - 15 * (ts / duration) ** 4 + 6 * (ts / duration) ** 5
    close_index = int(round(close_at * (samples - 1)))
    for i, t in enumerate(ts):
        p = start + (end - start) * s[i]
        event = "close" if i == close_index else None
        yield float(t), float(p[0]), float(p[1]), event
