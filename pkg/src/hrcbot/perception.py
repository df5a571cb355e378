"""Simulated object detection and the label-keyed pose registry.

The detector stands in for a vision network: every scene object is
independently seen with a configured probability, at a Gaussian-noised
pose.  The registry implements register-once semantics: an entry is
created at the first detection and only its pose/last_update move
afterwards; entries are never removed within a session.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .world import WorldState


@dataclass(frozen=True)
class DetectorConfig:
    detection_probability: float = 1.0
    position_noise_sigma: float = 0.0
    confidence_threshold: float = 0.5
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.detection_probability <= 1.0:
            raise ConfigError("detection_probability must be in [0, 1]")
        if self.position_noise_sigma < 0:
            raise ConfigError("position_noise_sigma must be >= 0")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError("confidence_threshold must be in [0, 1]")


@dataclass(frozen=True)
class Detection:
    label: str
    pose: tuple[float, float, float]  # x, y, yaw (measured)
    confidence: float
    timestamp: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfigError("confidence must be in [0, 1]")


def detect(world: WorldState, config: DetectorConfig, t: float,
           rng: np.random.Generator | None = None) -> list[Detection]:
    """One detector pass over the live world at time t."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    out = []
    for obj in world.objects.values():
        if rng.random() >= config.detection_probability:
            continue
        noise = rng.normal(0.0, config.position_noise_sigma, size=2) \
            if config.position_noise_sigma > 0 else np.zeros(2)
        confidence = float(rng.uniform(config.confidence_threshold, 1.0))
        out.append(Detection(
            label=obj.label,
            pose=(float(obj.pose[0] + noise[0]),
                  float(obj.pose[1] + noise[1]),
                  float(obj.yaw)),
            confidence=confidence,
            timestamp=float(t),
        ))
    return out


@dataclass
class RegistryEntry:
    registered_at: float
    pose: tuple[float, float, float]
    last_update: float


class ObjectRegistry:
    """Label-keyed store of perceived objects.

    One writer (the ingest loop), any number of readers; readers get
    copies, never live references.
    """

    def __init__(self):
        self._entries: dict[str, RegistryEntry] = {}
        self._lock = threading.Lock()
        self.stale_count = 0

    def ingest(self, detections: list[Detection], t: float | None = None) -> int:
        """Apply a batch of detections; returns how many were accepted.

        A detection older than the entry's last_update is stale: ignored
        and counted.  The detection's own timestamp is authoritative;
        `t` is only a fallback for timestamp-less callers.
        """
        accepted = 0
        with self._lock:
            for det in detections:
                stamp = det.timestamp if det.timestamp is not None else t
                entry = self._entries.get(det.label)
                if entry is None:
                    self._entries[det.label] = RegistryEntry(
                        registered_at=stamp, pose=det.pose, last_update=stamp)
                    accepted += 1
                elif stamp < entry.last_update:
                    self.stale_count += 1
                else:
                    entry.pose = det.pose
                    entry.last_update = stamp
                    accepted += 1
        return accepted

    def lookup(self, label: str) -> tuple[float, float, float] | None:
        """Current pose for a registered label; None when never seen."""
        with self._lock:
            entry = self._entries.get(label)
            return entry.pose if entry is not None else None

    def entry(self, label: str) -> RegistryEntry | None:
        with self._lock:
            e = self._entries.get(label)
            return RegistryEntry(e.registered_at, e.pose, e.last_update) if e else None

    def labels(self) -> list[str]:
        with self._lock:
            return list(self._entries)

    def snapshot(self) -> dict:
        with self._lock:
            return {
                label: {
                    "pose": list(e.pose),
                    "registered_at": e.registered_at,
                    "last_update": e.last_update,
                }
                for label, e in self._entries.items()
            }

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


def perception_cycle(world: WorldState, registry: ObjectRegistry,
                     config: DetectorConfig, t: float,
                     rng: np.random.Generator | None = None) -> int:
    """detect + threshold filter + ingest; returns accepted count."""
    detections = [d for d in detect(world, config, t, rng)
                  if d.confidence >= config.confidence_threshold]
    return registry.ingest(detections, t)
