"""Packaged default data files (scene, stub table, experiment suite)."""

from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"


def data_file(name: str) -> Path:
    return DATA_DIR / name


DEFAULT_SCENE = data_file("desk_scene.json")
DEFAULT_TABLE = data_file("stub_table.json")
DEFAULT_SUITE = data_file("experiments.json")
