"""Simulated detector statistics and registry register-once semantics."""

import numpy as np
import pytest

from hrcbot.errors import ConfigError
from hrcbot.perception import (
    Detection,
    DetectorConfig,
    ObjectRegistry,
    detect,
    perception_cycle,
)


def det(label, t, pose=(0.1, 0.2, 0.0), confidence=0.9):
    return Detection(label=label, pose=pose, confidence=confidence, timestamp=t)


class TestDetect:
    def test_noiseless_full_detection_is_exact(self, desk_world):
        config = DetectorConfig(detection_probability=1.0, position_noise_sigma=0.0)
        rng = np.random.default_rng(0)
        for _ in range(3):
            found = detect(desk_world, config, 0.0, rng)
            assert len(found) == len(desk_world.objects)
            for d in found:
                obj = desk_world.objects[d.label]
                assert d.pose[0] == obj.pose[0] and d.pose[1] == obj.pose[1]

    def test_zero_probability_detects_nothing(self, desk_world):
        config = DetectorConfig(detection_probability=0.0)
        assert detect(desk_world, config, 0.0, np.random.default_rng(0)) == []

    def test_detection_count_is_binomial(self, desk_world):
        # single-object scene, 1000 independent calls at p = 0.9
        world = desk_world
        only = {"cup": world.objects["cup"]}
        world.objects = only
        config = DetectorConfig(detection_probability=0.9)
        rng = np.random.default_rng(42)
        count = sum(len(detect(world, config, t, rng)) for t in range(1000))
        sigma = (1000 * 0.9 * 0.1) ** 0.5
        assert abs(count - 900) <= 3 * sigma

    def test_noise_magnitude_matches_sigma(self, desk_world):
        config = DetectorConfig(detection_probability=1.0,
                                position_noise_sigma=0.005)
        rng = np.random.default_rng(1)
        errs = []
        for _ in range(200):
            for d in detect(desk_world, config, 0.0, rng):
                obj = desk_world.objects[d.label]
                errs.append(d.pose[0] - obj.pose[0])
                errs.append(d.pose[1] - obj.pose[1])
        assert np.std(errs) == pytest.approx(0.005, rel=0.1)

    def test_confidence_at_or_above_threshold(self, desk_world):
        config = DetectorConfig(confidence_threshold=0.7)
        rng = np.random.default_rng(2)
        for d in detect(desk_world, config, 0.0, rng):
            assert 0.7 <= d.confidence <= 1.0

    @pytest.mark.parametrize("kwargs", [
        {"detection_probability": 1.1}, {"detection_probability": -0.1},
        {"position_noise_sigma": -1.0}, {"confidence_threshold": 2.0},
    ])
    def test_config_validation(self, kwargs):
        with pytest.raises(ConfigError):
            DetectorConfig(**kwargs)


class TestRegistry:
    def test_first_detection_registers(self):
        reg = ObjectRegistry()
        reg.ingest([det("cup", 1.0)])
        entry = reg.entry("cup")
        assert entry.registered_at == 1.0 and entry.last_update == 1.0

    def test_update_keeps_registered_at(self):
        reg = ObjectRegistry()
        reg.ingest([det("cup", 1.0)])
        reg.ingest([det("cup", 2.0, pose=(0.5, 0.5, 0.0))])
        entry = reg.entry("cup")
        assert entry.registered_at == 1.0
        assert entry.last_update == 2.0
        assert entry.pose == (0.5, 0.5, 0.0)

    def test_stale_detection_ignored_and_counted(self):
        reg = ObjectRegistry()
        reg.ingest([det("cup", 2.0)])
        accepted = reg.ingest([det("cup", 0.5, pose=(0.9, 0.9, 0.0))])
        assert accepted == 0
        assert reg.stale_count == 1
        assert reg.entry("cup").pose == (0.1, 0.2, 0.0)
        assert reg.entry("cup").last_update == 2.0

    def test_lookup_unknown_is_none_not_error(self):
        reg = ObjectRegistry()
        assert reg.lookup("never-seen") is None

    def test_lookup_returns_latest_pose(self):
        reg = ObjectRegistry()
        reg.ingest([det("cup", 1.0, pose=(0.1, 0.1, 0.0))])
        reg.ingest([det("cup", 2.0, pose=(0.2, 0.3, 0.0))])
        assert reg.lookup("cup") == (0.2, 0.3, 0.0)

    def test_entries_never_removed(self):
        reg = ObjectRegistry()
        reg.ingest([det("cup", 1.0)])
        reg.ingest([det("bowl", 2.0)])
        assert sorted(reg.labels()) == ["bowl", "cup"]
        assert len(reg) == 2

    def test_register_once_random_stream(self):
        rng = np.random.default_rng(99)
        reg = ObjectRegistry()
        first_seen: dict[str, float] = {}
        expected_last: dict[str, float] = {}
        for _ in range(2000):
            label = f"obj{rng.integers(8)}"
            t = float(rng.uniform(0, 100))
            reg.ingest([det(label, t)])
            first_seen.setdefault(label, t)
            expected_last[label] = max(expected_last.get(label, -np.inf), t)
            entry = reg.entry(label)
            assert entry.registered_at == first_seen[label]
            assert entry.last_update == expected_last[label]


class TestPerceptionCycle:
    def test_cycle_fills_registry_exactly(self, desk_world):
        reg = ObjectRegistry()
        config = DetectorConfig()
        accepted = perception_cycle(desk_world, reg, config, 0.0,
                                    np.random.default_rng(0))
        assert accepted == len(desk_world.objects)
        for label, obj in desk_world.objects.items():
            pose = reg.lookup(label)
            assert pose[0] == obj.pose[0] and pose[1] == obj.pose[1]
