"""Euler-Maruyama simulation of diagonal-noise SDEs and transition-pair sampling.

All randomness goes through ``numpy.random.Generator`` seeded with PCG64
(``numpy.random.default_rng``). PCG64 and the ziggurat normal sampler are
platform-independent, so a given seed reproduces bit-identical trajectories
on any machine running the same numpy major version.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

DIVERGENCE_BOUND = 1e6


class DivergenceError(FloatingPointError):
    """Raised when an integration leaves the finite, bounded region."""

    def __init__(self, step_index: int, message: str = ""):
        self.step_index = step_index
        super().__init__(message or f"integration diverged at step {step_index}")


@dataclass(frozen=True)
class SdeSystem:
    """dX = drift(X) dt + diffusion(X) * dW with diagonal noise.

    ``drift`` and ``diffusion`` act on arrays of shape ``(..., dimension)``.
    """

    dimension: int
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")


@dataclass(frozen=True)
class TransitionDataset:
    """Pairs ``(X[n], Y[n])`` where ``Y[n]`` is observed a lag ``tau`` after ``X[n]``."""

    X: np.ndarray
    Y: np.ndarray
    tau: float

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if X.shape != Y.shape:
            raise ValueError(f"X and Y shapes differ: {X.shape} vs {Y.shape}")
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one pair")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("dataset contains non-finite entries")
        if not self.tau > 0:
            raise ValueError("lag time must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def _zero_diffusion(x):
    return np.zeros_like(x)


def vanderpol(xi: float = 0.0) -> SdeSystem:
    """Van der Pol type oscillator with additive noise of amplitude ``xi``."""
    if xi < 0:
        raise ValueError("noise amplitude must be nonnegative")

    def drift(s):
        x, y = s[..., 0], s[..., 1]
        return np.stack([y, 2.0 * (0.2 - x**2) * y - x], axis=-1)

    def diffusion(s):
        return np.full_like(s, xi)

    return SdeSystem(2, drift, diffusion if xi > 0 else _zero_diffusion, name="vanderpol")


def lorenz(xi: float = 0.0) -> SdeSystem:
    """Lorenz-63 (10, 28, 8/3) with state-proportional noise ``xi * x_i`` per coordinate."""
    if xi < 0:
        raise ValueError("noise amplitude must be nonnegative")

    def drift(s):
        x, y, z = s[..., 0], s[..., 1], s[..., 2]
        return np.stack([10.0 * (y - x), 28.0 * x - y - x * z, x * y - (8.0 / 3.0) * z], axis=-1)

    def diffusion(s):
        # signed coordinate, as in the written equations
        return xi * s

    return SdeSystem(3, drift, diffusion if xi > 0 else _zero_diffusion, name="lorenz")


SYSTEMS = {"vanderpol": vanderpol, "lorenz": lorenz}


def _check_state(state, k):
    if not np.all(np.isfinite(state)) or np.any(np.abs(state) > DIVERGENCE_BOUND):
        raise DivergenceError(k, f"state left the bounded region at step {k}")


def propagate(system, states, n_steps, step, rng, record=False):
    """Advance a batch of states ``(B, D)`` by ``n_steps`` Euler-Maruyama steps."""
    # states: (B, D). Noise is drawn as one (B, D) block per step.
    sqrt_step = np.sqrt(step)
    out = [states.copy()] if record else None
    for k in range(n_steps):
        noise = rng.standard_normal(states.shape)
        states = states + system.drift(states) * step + system.diffusion(states) * sqrt_step * noise
        _check_state(states, k + 1)
        if record:
            out.append(states)
    return np.stack(out) if record else states


def _steps_for(duration, step, what="duration"):
    ratio = duration / step
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-12 * max(1.0, abs(ratio)):
        raise ValueError(f"{what} {duration} is not a positive integer multiple of step {step}")
    return n


def euler_maruyama(system: SdeSystem, x0, duration: float, step: float, seed: int) -> np.ndarray:
    """Integrate one path; returns a ``(T, D)`` array with ``T = duration/step + 1``.

    ``x[k+1] = x[k] + drift(x[k]) * step + diffusion(x[k]) * sqrt(step) * xi_k``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not duration >= step:
        raise ValueError("duration must be at least one step")
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    if x0.shape[1] != system.dimension:
        raise ValueError(f"x0 has dimension {x0.shape[1]}, system expects {system.dimension}")
    n_steps = int(round(duration / step))
    rng = np.random.default_rng(seed)
    return propagate(system, x0, n_steps, step, rng, record=True)[:, 0, :]


def sample_pairs_uniform(system: SdeSystem, box: Sequence[tuple[float, float]], n: int,
                         tau: float, step: float, seed: int) -> TransitionDataset:
    """Draw ``X`` uniformly in ``box`` and integrate every row for time ``tau``."""
    box = np.asarray(box, dtype=float)
    if box.shape != (system.dimension, 2):
        raise ValueError("box needs one (low, high) interval per dimension")
    if n < 1:
        raise ValueError("n must be positive")
    if not step > 0:
        raise ValueError("step must be positive")
    n_steps = _steps_for(tau, step, "lag time")
    rng = np.random.default_rng(seed)
    X = rng.uniform(box[:, 0], box[:, 1], size=(n, system.dimension))
    Y = propagate(system, X, n_steps, step, rng)
    return TransitionDataset(X, Y, tau)


def flow_images(system: SdeSystem, X, tau: float, step: float, seed: int = 0) -> np.ndarray:
    """Propagate each row of ``X`` for time ``tau`` (noise drawn from ``seed``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    rng = np.random.default_rng(seed)
    return propagate(system, X, _steps_for(tau, step, "lag time"), step, rng)


def sample_pairs_from_trajectory(trajectory, tau_steps: int, n: int, seed: int,
                                 step: float = 1.0) -> TransitionDataset:
    """Pick ``n`` start indices uniformly with replacement from ``[0, T - tau_steps)``.

    ``step`` is the time between trajectory rows; the lag of the result is
    ``tau_steps * step``.
    """
    traj = np.atleast_2d(np.asarray(trajectory, dtype=float))
    if tau_steps < 1:
        raise ValueError("tau_steps must be at least 1")
    if traj.shape[0] < tau_steps + 1:
        raise ValueError(f"trajectory of length {traj.shape[0]} is shorter than tau_steps + 1 = {tau_steps + 1}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, traj.shape[0] - tau_steps, size=n)
    return TransitionDataset(traj[idx], traj[idx + tau_steps], tau_steps * step)


def lag_steps(tau: float, step: float) -> int:
    return _steps_for(tau, step, "lag time")


# -- file formats ----------------------------------------------------------

def save_trajectory(path, trajectory, step: float) -> None:
    traj = np.atleast_2d(np.asarray(trajectory, dtype=float))
    t = np.arange(traj.shape[0]) * step
    header = ",".join(["t"] + [f"x{i}" for i in range(traj.shape[1])])
    np.savetxt(path, np.column_stack([t, traj]), delimiter=",", header=header,
               comments="", fmt="%.17g")


def load_trajectory(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(t, trajectory)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:]


def save_dataset(path, data: TransitionDataset) -> None:
    """Write ``path`` (CSV) plus a ``.json`` sidecar with tau, n and d."""
    path = Path(path)
    header = ",".join([f"x_{i}" for i in range(data.d)] + [f"y_{i}" for i in range(data.d)])
    np.savetxt(path, np.hstack([data.X, data.Y]), delimiter=",", header=header,
               comments="", fmt="%.17g")
    sidecar = {"tau": data.tau, "n": data.n, "d": data.d}
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_dataset(path) -> TransitionDataset:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    d = int(meta["d"])
    if values.shape != (int(meta["n"]), 2 * d):
        raise ValueError(f"{path}: table shape {values.shape} disagrees with sidecar {meta}")
    return TransitionDataset(values[:, :d], values[:, d:], float(meta["tau"]))
