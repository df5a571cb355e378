"""Dynamic Movement Primitives: fit a demonstrated trajectory, replay it
toward new starts, goals and durations.

A DMP encodes one demonstration as a critically damped second-order
attractor plus a phase-driven forcing term learned from the data:

    tau * dz/dt = alpha_z * (beta_z * (g - y) - z) + f(x)
    tau * dy/dt = z
    tau * dx/dt = -alpha_x * x

with f(x) = (sum_i psi_i(x) w_i / sum_i psi_i(x)) * x * (g - y0) and
Gaussian basis functions psi_i(x) = exp(-h_i (x - c_i)^2).  Because the
forcing vanishes with the phase x, the attractor guarantees convergence
to the goal for any start/goal/duration the model is replayed with.

The module exposes a functional core (`fit_dmp`, `rollout_dmp`,
`canonical_phase`, `forcing_term`) plus `DynamicMovementPrimitive`, a
scikit-learn style estimator wrapping it for pipeline composition.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import (
    ConfigError,
    DivergenceError,
    InsufficientDataError,
    InvalidParameterError,
    InvalidTrajectoryError,
    ResolutionError,
)

# Implementation defaults; the source formulation leaves all gains open.
DEFAULT_ALPHA_X = 4.0
DEFAULT_ALPHA_Z = 25.0
DEFAULT_N_BASIS = 25
DEFAULT_REGULARIZATION = 1e-8
SETTLE_FACTOR = 1.5          # rollout duration = settle_factor * tau
ROLLOUT_STEPS_PER_TAU = 200  # default dt = tau / 200
MIN_STEPS_PER_TAU = 50       # resolution guard: dt <= tau / 50

# Below this start-to-goal distance the amplitude scaling is skipped
# during fitting to avoid dividing by a vanishing displacement.
DEGENERATE_AMPLITUDE = 1e-6

# Normalized forcing is defined as 0 once the basis activations sum
# below this floor (far outside the demonstrated phase range).
_PSI_FLOOR = 1e-10

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Trajectory:
    """An ordered sequence of timed positions, one row per sample.

    times : (n,) seconds, strictly increasing.
    positions : (n, dof) meters.
    """

    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        if times.ndim != 1 or positions.ndim != 2:
            raise InvalidTrajectoryError("times must be 1-D and positions 2-D")
        if len(times) != len(positions):
            raise InvalidTrajectoryError(
                f"{len(times)} timestamps for {len(positions)} samples"
            )
        if len(times) == 0:
            raise InvalidTrajectoryError("empty trajectory")
        if not (np.isfinite(times).all() and np.isfinite(positions).all()):
            raise InvalidTrajectoryError("non-finite trajectory values")
        if len(times) > 1 and not (np.diff(times) > 0).all():
            raise InvalidTrajectoryError("timestamps must be strictly increasing")
        times.setflags(write=False)
        positions.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)

    @property
    def n_samples(self) -> int:
        return len(self.times)

    @property
    def dof(self) -> int:
        return self.positions.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def resampled(self, n: int) -> "Trajectory":
        """Linear resampling onto a uniform n-point grid over the same span."""
        if n < 2:
            raise InvalidParameterError("resampling needs n >= 2")
        t = np.linspace(self.times[0], self.times[-1], n)
        y = np.column_stack(
            [np.interp(t, self.times, self.positions[:, d]) for d in range(self.dof)]
        )
        return Trajectory(t, y)


@dataclass(frozen=True)
class DMPConfig:
    """Fitting hyperparameters.  beta_z defaults to alpha_z/4 (critical
    damping); regularization is the ridge term of the weight regression."""

    n_basis: int = DEFAULT_N_BASIS
    alpha_z: float = DEFAULT_ALPHA_Z
    beta_z: float | None = None
    alpha_x: float = DEFAULT_ALPHA_X
    regularization: float = DEFAULT_REGULARIZATION

    def __post_init__(self):
        if self.n_basis < 2:
            raise InvalidParameterError("n_basis must be >= 2")
        if self.alpha_z <= 0 or self.alpha_x <= 0:
            raise InvalidParameterError("gains must be positive")
        if self.beta_z is not None and self.beta_z <= 0:
            raise InvalidParameterError("beta_z must be positive")
        if self.regularization < 0:
            raise InvalidParameterError("regularization must be >= 0")

    @property
    def beta_z_effective(self) -> float:
        return self.alpha_z / 4.0 if self.beta_z is None else self.beta_z


@dataclass(frozen=True)
class DMPModel:
    """A fitted movement primitive.

    w : (dof, n_basis) forcing weights.
    c, h : basis centers (strictly decreasing in phase) and widths.
    degenerate : per-DOF flag, True when the demo had |g - y0| below
        DEGENERATE_AMPLITUDE and the amplitude scaling was skipped.
    """

    w: np.ndarray
    c: np.ndarray
    h: np.ndarray
    alpha_z: float
    beta_z: float
    alpha_x: float
    tau: float
    y0: np.ndarray
    g: np.ndarray
    degenerate: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        c = np.asarray(self.c, dtype=float)
        h = np.asarray(self.h, dtype=float)
        y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        degenerate = self.degenerate
        if degenerate is None:
            degenerate = np.zeros(len(y0), dtype=bool)
        degenerate = np.atleast_1d(np.asarray(degenerate, dtype=bool))
        if len(c) < 2:
            raise InvalidParameterError("model needs at least 2 basis functions")
        if w.shape != (len(y0), len(c)) or len(h) != len(c):
            raise InvalidParameterError("inconsistent model array shapes")
        if len(g) != len(y0) or len(degenerate) != len(y0):
            raise InvalidParameterError("inconsistent per-DOF array lengths")
        if self.alpha_z <= 0 or self.beta_z <= 0 or self.alpha_x <= 0:
            raise InvalidParameterError("gains must be positive")
        if self.tau <= 0:
            raise InvalidParameterError("tau must be positive")
        if not (np.diff(c) < 0).all():
            raise InvalidParameterError("centers must be strictly decreasing")
        if not (h > 0).all():
            raise InvalidParameterError("widths must be positive")
        for name, arr in (("w", w), ("c", c), ("h", h), ("y0", y0), ("g", g)):
            if not np.isfinite(arr).all():
                raise InvalidParameterError(f"non-finite values in {name}")
            arr.setflags(write=False)
        degenerate.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "degenerate", degenerate)

    @property
    def n_basis(self) -> int:
        return len(self.c)

    @property
    def dof(self) -> int:
        return len(self.y0)

    def to_dict(self) -> dict:
        return {
            "version": MODEL_SCHEMA_VERSION,
            "n_basis": self.n_basis,
            "alpha_z": self.alpha_z,
            "beta_z": self.beta_z,
            "alpha_x": self.alpha_x,
            "tau": self.tau,
            "y0": self.y0.tolist(),
            "g": self.g.tolist(),
            "w": self.w.tolist(),
            "c": self.c.tolist(),
            "h": self.h.tolist(),
            "degenerate": self.degenerate.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DMPModel":
        version = doc.get("version")
        if version != MODEL_SCHEMA_VERSION:
            raise ConfigError(f"unsupported model schema version: {version!r}")
        return cls(
            w=np.array(doc["w"], dtype=float),
            c=np.array(doc["c"], dtype=float),
            h=np.array(doc["h"], dtype=float),
            alpha_z=float(doc["alpha_z"]),
            beta_z=float(doc["beta_z"]),
            alpha_x=float(doc["alpha_x"]),
            tau=float(doc["tau"]),
            y0=np.array(doc["y0"], dtype=float),
            g=np.array(doc["g"], dtype=float),
            degenerate=np.array(doc["degenerate"], dtype=bool),
        )


def canonical_phase(t, tau: float, alpha_x: float):
    """Phase x(t) = exp(-alpha_x * t / tau); x(0) = 1, decays toward 0.

    Accepts scalar or array t (seconds, >= 0).
    """
    if tau <= 0:
        raise InvalidParameterError(f"tau must be positive, got {tau}")
    if alpha_x <= 0:
        raise InvalidParameterError(f"alpha_x must be positive, got {alpha_x}")
    t_arr = np.asarray(t, dtype=float)
    if (t_arr < 0).any():
        raise InvalidParameterError("t must be non-negative")
    x = np.exp(-alpha_x * t_arr / tau)
    return float(x) if np.isscalar(t) or t_arr.ndim == 0 else x


def place_basis(n_basis: int, alpha_x: float) -> tuple[np.ndarray, np.ndarray]:
    """Centers uniform in time (exponential in phase), widths from the
    spacing of consecutive centers (last width copied)."""
    if n_basis < 2:
        raise InvalidParameterError("n_basis must be >= 2")
    i = np.arange(n_basis)
    c = np.exp(-alpha_x * i / (n_basis - 1))
    dc = np.diff(c)
    h = 1.0 / (2.0 * dc**2)
    h = np.append(h, h[-1])
    return c, h


def basis_activations(c: np.ndarray, h: np.ndarray, x) -> np.ndarray:
    """Gaussian activations psi_i(x) = exp(-h_i (x - c_i)^2).

    x scalar -> (n_basis,); x (m,) -> (m, n_basis).
    """
    x_arr = np.asarray(x, dtype=float)
    if x_arr.ndim == 0:
        return np.exp(-h * (x_arr - c) ** 2)
    return np.exp(-h * (x_arr[:, None] - c) ** 2)


def normalized_forcing(c, h, w, x, amplitude=1.0) -> float:
    """(sum psi w / sum psi) * x * amplitude for one DOF's weight vector.

    Returns 0 when the activation sum underflows the machine-safe floor.
    """
    psi = basis_activations(np.asarray(c, float), np.asarray(h, float), float(x))
    s = psi.sum()
    if s < _PSI_FLOOR:
        return 0.0
    return float(psi @ np.asarray(w, float) / s * x * amplitude)


def forcing_term(model: DMPModel, x: float, dof: int) -> float:
    """Forcing contribution of `model` for one DOF at phase x in (0, 1]."""
    if not 0.0 < x <= 1.0:
        raise InvalidParameterError(f"phase must be in (0, 1], got {x}")
    if not 0 <= dof < model.dof:
        raise InvalidParameterError(f"dof {dof} out of range for {model.dof}-DOF model")
    amp = 1.0 if model.degenerate[dof] else float(model.g[dof] - model.y0[dof])
    return normalized_forcing(model.c, model.h, model.w[dof], x, amp)


def fit_dmp(demo: Trajectory, config: DMPConfig | None = None) -> DMPModel:
    """Fit forcing weights so that replaying the model on the recorded
    (y0, g, tau) reconstructs the demonstration.

    The demo is resampled onto a uniform grid (teleoperation samples
    arrive at jittery rates), differentiated by central finite
    differences (one-sided at the ends), and the per-sample forcing
    target

        f_target = tau^2 * ydd - alpha_z * (beta_z * (g - y) - tau * yd)

    is mapped to phase and regressed onto the normalized basis
    activations by ridge regression.  The regression includes
    zero-target rows at phases below the demo's final phase so the
    forcing decays through the settle window instead of extrapolating
    the last weights; this is what keeps goal generalization within
    tolerance, which per-basis weighted averaging cannot achieve.
    """
    config = config or DMPConfig()
    if demo.n_samples < 3:
        raise InsufficientDataError(
            f"need at least 3 samples to fit, got {demo.n_samples}"
        )
    tau = demo.duration
    if tau <= 0:
        raise InvalidTrajectoryError("demo duration must be positive")

    uniform = demo.resampled(demo.n_samples)
    t = uniform.times - uniform.times[0]
    y = uniform.positions
    dt = t[1] - t[0]
    alpha_z = config.alpha_z
    beta_z = config.beta_z_effective
    alpha_x = config.alpha_x

    yd = np.gradient(y, dt, axis=0)
    ydd = np.gradient(yd, dt, axis=0)

    y0 = y[0].copy()
    g = y[-1].copy()
    f_target = tau**2 * ydd - alpha_z * (beta_z * (g - y) - tau * yd)

    x = np.exp(-alpha_x * t / tau)
    c, h = place_basis(config.n_basis, alpha_x)
    psi = basis_activations(c, h, x)  # (n, n_basis)

    amp = g - y0
    degenerate = np.abs(amp) < DEGENERATE_AMPLITUDE
    amp_eff = np.where(degenerate, 1.0, amp)

    design = psi / psi.sum(axis=1, keepdims=True)
    x_tail = np.geomspace(x[-1] * 0.98, x[-1] * math.exp(-alpha_x), config.n_basis)
    psi_tail = basis_activations(c, h, x_tail)
    tail = psi_tail / psi_tail.sum(axis=1, keepdims=True)
    gram = (design.T @ design + tail.T @ tail
            + config.regularization * np.eye(config.n_basis))

    w = np.zeros((uniform.dof, config.n_basis))
    for d in range(uniform.dof):
        ratio = f_target[:, d] / (x * amp_eff[d])
        try:
            w[d] = np.linalg.solve(gram, design.T @ ratio)
        except np.linalg.LinAlgError:
            w[d] = np.linalg.lstsq(gram, design.T @ ratio, rcond=None)[0]

    return DMPModel(
        w=w, c=c, h=h,
        alpha_z=alpha_z, beta_z=beta_z, alpha_x=alpha_x,
        tau=tau, y0=y0, g=g, degenerate=degenerate,
    )


def _rollout_amplitudes(model: DMPModel, y0: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Forcing amplitude per DOF for a rollout toward (y0, g).

    A DOF fitted without amplitude scaling keeps amplitude 1 unless the
    new displacement is itself above the degeneracy threshold.
    """
    amp = g - y0
    keep_unit = model.degenerate & (np.abs(amp) <= DEGENERATE_AMPLITUDE)
    return np.where(keep_unit, 1.0, amp)


def rollout_dmp(
    model: DMPModel,
    y0: Sequence[float] | np.ndarray | float | None = None,
    g: Sequence[float] | np.ndarray | float | None = None,
    tau: float | None = None,
    dt: float | None = None,
    method: str = "rk4",
    settle_factor: float = SETTLE_FACTOR,
) -> Trajectory:
    """Integrate the fitted system from y0 toward g over settle_factor*tau.

    Defaults reuse the recorded start, goal and duration.  `method` is
    "rk4" (default) or "euler".
    """
    y0 = model.y0 if y0 is None else np.atleast_1d(np.asarray(y0, dtype=float))
    g = model.g if g is None else np.atleast_1d(np.asarray(g, dtype=float))
    tau = model.tau if tau is None else float(tau)
    if tau <= 0:
        raise InvalidParameterError(f"tau must be positive, got {tau}")
    if dt is None:
        dt = tau / ROLLOUT_STEPS_PER_TAU
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    if dt > tau / MIN_STEPS_PER_TAU:
        raise ResolutionError(
            f"dt={dt} too coarse for tau={tau}; need dt <= tau/{MIN_STEPS_PER_TAU}"
        )
    if y0.shape != (model.dof,) or g.shape != (model.dof,):
        raise InvalidParameterError(
            f"start/goal must have {model.dof} DOFs, got {y0.shape}/{g.shape}"
        )
    if method not in ("rk4", "euler"):
        raise InvalidParameterError(f"unknown integrator {method!r}")

    amp = _rollout_amplitudes(model, y0, g)
    w, c, h = model.w, model.c, model.h
    alpha_z, beta_z, alpha_x = model.alpha_z, model.beta_z, model.alpha_x

    def deriv(x, y, z):
        psi = np.exp(-h * (x - c) ** 2)
        s = psi.sum()
        f = (psi @ w.T) / s * x * amp if s >= _PSI_FLOOR else np.zeros_like(y)
        dx = -alpha_x * x / tau
        dy = z / tau
        dz = (alpha_z * (beta_z * (g - y) - z) + f) / tau
        return dx, dy, dz

    n_steps = max(1, int(round(settle_factor * tau / dt)))
    times = np.arange(n_steps + 1) * dt
    track = np.empty((n_steps + 1, model.dof))
    track[0] = y0

    x = 1.0
    y = y0.astype(float).copy()
    z = np.zeros(model.dof)
    # overflow in a diverging run is reported via DivergenceError below
    with np.errstate(over="ignore", invalid="ignore"):
        return _integrate(deriv, method, n_steps, dt, times, track, x, y, z)


def _integrate(deriv, method, n_steps, dt, times, track, x, y, z):
    for k in range(n_steps):
        if method == "euler":
            dx, dy, dz = deriv(x, y, z)
            x += dt * dx
            y = y + dt * dy
            z = z + dt * dz
        else:
            k1 = deriv(x, y, z)
            k2 = deriv(x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1], z + 0.5 * dt * k1[2])
            k3 = deriv(x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1], z + 0.5 * dt * k2[2])
            k4 = deriv(x + dt * k3[0], y + dt * k3[1], z + dt * k3[2])
            x += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            y = y + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            z = z + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.isfinite(y).all() and np.isfinite(z).all() and math.isfinite(x)):
            raise DivergenceError(
                f"non-finite state at step {k + 1}; check transformation gains"
            )
        track[k + 1] = y

    return Trajectory(times, track)


class DynamicMovementPrimitive(BaseEstimator):
    """Estimator-style wrapper around the functional DMP core.

    fit(times, positions) learns one demonstration; rollout() replays
    it, optionally toward a new start/goal/duration.  Constructor
    arguments mirror DMPConfig so get_params/set_params compose with
    scikit-learn tooling.
    """

    def __init__(self, n_basis=DEFAULT_N_BASIS, alpha_z=DEFAULT_ALPHA_Z,
                 beta_z=None, alpha_x=DEFAULT_ALPHA_X,
                 regularization=DEFAULT_REGULARIZATION):
        self.n_basis = n_basis
        self.alpha_z = alpha_z
        self.beta_z = beta_z
        self.alpha_x = alpha_x
        self.regularization = regularization

    def _config(self) -> DMPConfig:
        return DMPConfig(
            n_basis=self.n_basis,
            alpha_z=self.alpha_z,
            beta_z=self.beta_z,
            alpha_x=self.alpha_x,
            regularization=self.regularization,
        )

    def fit(self, times, positions):
        demo = Trajectory(np.asarray(times, dtype=float),
                          np.asarray(positions, dtype=float))
        self.model_ = fit_dmp(demo, self._config())
        return self

    def rollout(self, start=None, goal=None, duration=None, dt=None,
                method="rk4") -> Trajectory:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit() before rollout()")
        return rollout_dmp(self.model_, y0=start, g=goal, tau=duration,
                           dt=dt, method=method)


# ---------------------------------------------------------------------------
# Serialization


def save_model(model: DMPModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2))


def load_model(path: str | Path) -> DMPModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    return DMPModel.from_dict(doc)


def save_trajectory(traj: Trajectory, path: str | Path) -> None:
    """CSV with header t,y0,...,y{d-1}; seconds and meters."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"y{d}" for d in range(traj.dof)])
        for t, row in zip(traj.times, traj.positions):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def load_trajectory(path: str | Path) -> Trajectory:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidTrajectoryError(f"{path}: empty trajectory file")
        if not header or header[0] != "t" or any(
            col != f"y{d}" for d, col in enumerate(header[1:])
        ):
            raise InvalidTrajectoryError(f"{path}: malformed header {header!r}")
        times, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise InvalidTrajectoryError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}"
                )
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise InvalidTrajectoryError(f"{path}:{lineno}: {exc}") from exc
            times.append(values[0])
            rows.append(values[1:])
    return Trajectory(np.array(times), np.array(rows))
