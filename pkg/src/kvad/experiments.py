"""Benchmark setups for the oscillator and Lorenz systems, driven by one config."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import dynamics
from .baselines import edmd_fit, vamp_fit
from .basis import DEFAULT_RANK_TOL, fit_whitening, make_basis
from .estimator import kvad_fit
from .evaluation import fit_state_regressor, reconstruction_error
from .kernel import KernelSpec, gram

METHODS = ("kvad", "vamp", "edmd")

# per-system defaults: lag, step, kernel bandwidth, horizon, noise grid
SYSTEM_DEFAULTS = {
    "vanderpol": {"tau": 0.2, "step": 0.01, "sigma": 1.5, "L": 50, "xis": [0.0, 0.2],
                  "box": [[-1.5, 1.5], [-1.5, 1.5]]},
    "lorenz": {"tau": 0.1, "step": 0.005, "sigma": 10.0, "L": 8, "xis": [0.0, 0.5],
               "duration": 200.0, "burn_in": 5.0, "x0": [1.0, 1.0, 1.0]},
    "file": {"tau": None, "step": None, "sigma": 1.0, "L": 8, "xis": [0.0]},
}


class ConfigError(ValueError):
    pass


def sub_seed(root: int, label: str) -> int:
    """Stable 63-bit seed for one named purpose, derived from the root seed."""
    digest = hashlib.sha256(f"{root}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass
class ExperimentConfig:
    system: str = "vanderpol"
    xi: float = 0.0
    n: int = 2000
    tau: float | None = None
    step: float | None = None
    basis_size: int = 500
    seed: int = 0
    sigma: float | None = None
    m: list = field(default_factory=lambda: [3, 5, 10])
    methods: list = field(default_factory=lambda: list(METHODS))
    out: str = "out"
    xis: list | None = None
    rank_tol: float = DEFAULT_RANK_TOL
    ridge: float = 1e-6
    L: int | None = None
    n_starts: int = 100
    replicates: int = 100
    duration: float | None = None
    burn_in: float | None = None
    x0: list | None = None
    box: list | None = None
    trajectory: str | None = None
    c_min: float = -3.0
    c_max: float = 3.0
    c_step: float = 0.05

    def __post_init__(self):
        if self.system not in SYSTEM_DEFAULTS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {sorted(SYSTEM_DEFAULTS)}")
        defaults = SYSTEM_DEFAULTS[self.system]
        for key in ("tau", "step", "sigma", "L", "xis", "box", "duration", "burn_in", "x0"):
            if getattr(self, key) is None and defaults.get(key) is not None:
                setattr(self, key, defaults[key])
        self.m = [int(v) for v in self.m]
        self.methods = [str(v) for v in self.methods]
        self.xis = [float(v) for v in self.xis]
        self.validate()

    def validate(self):
        bad = [mth for mth in self.methods if mth not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)}")
        if self.system == "file":
            if not self.trajectory or not Path(self.trajectory).exists():
                raise ConfigError(f"trajectory file {self.trajectory!r} does not exist")
        else:
            if not (self.step and self.step > 0):
                raise ConfigError("step must be positive")
            if not (self.tau and self.tau > 0):
                raise ConfigError("tau must be positive")
            try:
                dynamics.lag_steps(self.tau, self.step)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.system == "lorenz" and not (self.duration and self.duration > 0):
            raise ConfigError("trajectory duration must be positive")
        if self.n < 1 or self.basis_size < 1:
            raise ConfigError("n and basis_size must be positive")
        if any(v < 1 for v in self.m):
            raise ConfigError("model dimensions must be at least 1")
        if self.xi < 0 or any(v < 0 for v in self.xis):
            raise ConfigError("noise amplitudes must be nonnegative")
        if not (self.sigma and self.sigma > 0):
            raise ConfigError("kernel bandwidth must be positive")
        if self.L < 1 or self.n_starts < 1 or self.replicates < 1:
            raise ConfigError("L, n_starts and replicates must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def with_xi(self, xi: float) -> "ExperimentConfig":
        d = self.to_dict()
        d["xi"] = float(xi)
        return ExperimentConfig.from_dict(d)

    @property
    def kernel(self) -> KernelSpec:
        return KernelSpec(self.sigma)


# -- data -------------------------------------------------------------------

def system_for(cfg: ExperimentConfig):
    return dynamics.SYSTEMS[cfg.system](cfg.xi)


def lorenz_trajectory(cfg: ExperimentConfig, label: str) -> np.ndarray:
    """Trajectory of length ``duration`` after discarding ``burn_in``."""
    total = cfg.duration + cfg.burn_in
    traj = dynamics.euler_maruyama(system_for(cfg), cfg.x0, total, cfg.step,
                                   sub_seed(cfg.seed, f"{label}/xi={cfg.xi}"))
    return traj[int(round(cfg.burn_in / cfg.step)):]


def _file_trajectory(cfg):
    t, traj = dynamics.load_trajectory(cfg.trajectory)
    if traj.shape[0] < 2:
        raise ConfigError("trajectory file needs at least two rows")
    step = float(t[1] - t[0])
    return traj, step


def build_dataset(cfg: ExperimentConfig):
    """Training pairs, plus the training trajectory when there is one."""
    if cfg.system == "vanderpol":
        data = dynamics.sample_pairs_uniform(system_for(cfg), cfg.box, cfg.n, cfg.tau, cfg.step,
                                             sub_seed(cfg.seed, f"data/xi={cfg.xi}"))
        return data, None
    if cfg.system == "lorenz":
        traj = lorenz_trajectory(cfg, "train-trajectory")
        lag = dynamics.lag_steps(cfg.tau, cfg.step)
        data = dynamics.sample_pairs_from_trajectory(traj, lag, cfg.n, sub_seed(cfg.seed, f"pairs/xi={cfg.xi}"), cfg.step)
        return data, traj
    traj, step = _file_trajectory(cfg)
    lag = max(1, int(round(cfg.tau / step))) if cfg.tau else 1
    train = traj[: traj.shape[0] // 2]
    data = dynamics.sample_pairs_from_trajectory(train, lag, cfg.n, sub_seed(cfg.seed, "pairs"), step)
    return data, train


def evaluation_set(cfg: ExperimentConfig, data):
    """Start states and the true states at lags 1..L, independent of the training data."""
    if cfg.system == "vanderpol":
        rng = np.random.default_rng(sub_seed(cfg.seed, f"eval/xi={cfg.xi}"))
        box = np.asarray(cfg.box, dtype=float)
        starts = rng.uniform(box[:, 0], box[:, 1], size=(cfg.n_starts, box.shape[0]))
        system = system_for(cfg)
        lag = dynamics.lag_steps(cfg.tau, cfg.step)
        truth = np.empty((cfg.n_starts, cfg.L, starts.shape[1]))
        state = starts
        for l in range(cfg.L):
            state = dynamics.propagate(system, state, lag, cfg.step, rng)
            truth[:, l] = state
        return starts, truth
    if cfg.system == "lorenz":
        traj = lorenz_trajectory(cfg, "eval-trajectory")
        lag = dynamics.lag_steps(cfg.tau, cfg.step)
    else:
        full, step = _file_trajectory(cfg)
        traj = full[full.shape[0] // 2:]
        lag = max(1, int(round(data.tau / step)))
    if traj.shape[0] <= cfg.L * lag:
        raise ConfigError(f"evaluation trajectory is shorter than L={cfg.L} lags")
    rng = np.random.default_rng(sub_seed(cfg.seed, f"eval/xi={cfg.xi}"))
    idx = rng.integers(0, traj.shape[0] - cfg.L * lag, size=cfg.n_starts)
    truth = np.stack([traj[idx + l * lag] for l in range(1, cfg.L + 1)], axis=1)
    return traj[idx], truth


# -- fitting ----------------------------------------------------------------

@dataclass
class FittedMethods:
    data: object
    wb_x: object
    wb_y: object
    G_yy: np.ndarray
    kvad_full: object = None
    vamp: object = None
    edmd: object = None


def fit_all(cfg: ExperimentConfig, data, methods=None, edmd_k: int | None = None) -> FittedMethods:
    methods = methods or cfg.methods
    basis = make_basis(cfg.basis_size, data.d, sub_seed(cfg.seed, "basis"))
    wb_x = fit_whitening(basis, data.X, cfg.rank_tol)
    wb_y = fit_whitening(basis, data.Y, cfg.rank_tol)
    G_yy = gram(cfg.kernel, data.Y).values
    fitted = FittedMethods(data, wb_x, wb_y, G_yy)
    if "kvad" in methods:
        fitted.kvad_full = kvad_fit(data, wb_x, cfg.kernel, wb_x.effective_dim + 1, cfg.rank_tol, G_yy=G_yy)
    if "vamp" in methods:
        fitted.vamp = vamp_fit(data, wb_x, wb_y)
    if "edmd" in methods:
        fitted.edmd = edmd_fit(data, cfg.kernel, cfg.ridge, edmd_k)
    return fitted


def method_model(fitted: FittedMethods, method: str, m: int, cfg: ExperimentConfig):
    """A model of dimension ``m`` exposing ``features`` and ``K``."""
    if method == "kvad":
        return kvad_fit(fitted.data, fitted.wb_x, cfg.kernel, m, cfg.rank_tol, G_yy=fitted.G_yy)
    if method == "vamp":
        return fitted.vamp.linear_model(fitted.data, m, cfg.rank_tol)
    if method == "edmd":
        return fitted.edmd.linear_model(fitted.data, m, cfg.rank_tol)
    raise ConfigError(f"unknown method {method!r}")


def reconstruction_grid(cfg: ExperimentConfig):
    """Reports for every (xi, m, method) in the config grid."""
    reports = []
    for xi in cfg.xis:
        c = cfg.with_xi(xi)
        data, _ = build_dataset(c)
        starts, truth = evaluation_set(c, data)
        fitted = fit_all(c, data, edmd_k=max(c.m) + 2 if "edmd" in c.methods else None)
        for m in c.m:
            for method in c.methods:
                model = method_model(fitted, method, m, c)
                G = fit_state_regressor(model.features(data.X), data.Y, c.rank_tol)
                reports.append(reconstruction_error(
                    model, G, truth, starts, c.L, method=method, m=m, xi=xi,
                    replicates=c.replicates, seed=sub_seed(c.seed, f"bootstrap/xi={xi}/m={m}")))
    return reports
