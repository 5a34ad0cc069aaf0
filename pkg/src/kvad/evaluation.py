"""Multi-step trajectory reconstruction error with bootstrap spread."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .basis import DEFAULT_RANK_TOL
from .estimator import stable_pinv


@dataclass
class ReconstructionReport:
    method: str
    m: int
    xi: float
    L: int
    per_start: np.ndarray  # error of each start state
    errors: np.ndarray  # bootstrap replicate means
    mean: float = field(init=False)
    stddev: float = field(init=False)

    def __post_init__(self):
        self.per_start = np.asarray(self.per_start, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)
        self.mean = float(np.mean(self.errors))
        self.stddev = float(np.std(self.errors, ddof=1)) if self.errors.size > 1 else 0.0

    @property
    def n_starts(self) -> int:
        return self.per_start.shape[0]

    def summary_row(self) -> list:
        return [self.method, self.m, self.xi, repr(self.mean), repr(self.stddev), self.n_starts, self.L]


SUMMARY_HEADER = ["method", "m", "xi", "mean_error", "std_error", "n_starts", "L"]


def write_summary_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for r in reports:
            w.writerow(r.summary_row())


def write_replicates_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "m", "xi", "replicate", "error"])
        for r in reports:
            for i, e in enumerate(r.errors):
                w.writerow([r.method, r.m, r.xi, i, repr(float(e))])


def fit_state_regressor(f_X, Y, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """``G`` with ``y ~ G.T @ f(x)`` in the least-squares sense."""
    f_X = np.atleast_2d(np.asarray(f_X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if f_X.shape[0] != Y.shape[0]:
        raise ValueError("f(X) and Y need the same number of rows")
    return stable_pinv(f_X, rank_tol) @ Y


def predict_path(model, G, x0, L: int) -> np.ndarray:
    """Predicted conditional means at lags ``1..L``: row ``l-1`` is ``(K^{l-1} G)' f(x0)``.

    ``x0`` may be a single state (result ``(L, D)``) or a batch ``(S, D)``
    (result ``(S, L, D)``).
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    x0 = np.asarray(x0, dtype=float)
    single = x0.ndim == 1
    v = model.features(np.atleast_2d(x0))
    out = np.empty((v.shape[0], L, G.shape[1]))
    for l in range(L):
        out[:, l] = v @ G
        v = v @ model.K
    return out[0] if single else out


def path_errors(predicted, truth) -> np.ndarray:
    """``sqrt(mean_l |x_l - prediction_l|)`` per start (norms averaged, not squared norms)."""
    dist = np.linalg.norm(np.asarray(truth) - np.asarray(predicted), axis=-1)
    return np.sqrt(dist.mean(axis=-1))


def bootstrap_means(values, replicates: int = 100, seed: int = 0) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.shape[0], size=(replicates, values.shape[0]))
    return values[idx].mean(axis=1)


def reconstruction_error(model, G, reference, starts, L: int, *, method: str = "",
                         m: int | None = None, xi: float = 0.0, replicates: int = 100,
                         seed: int = 0) -> ReconstructionReport:
    """Reconstruction error of ``model`` over ``starts``.

    ``reference`` is either a callable ``(starts, L) -> (S, L, D)`` of true states
    at lags ``1..L``, or an array of that shape.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    truth = reference(starts, L) if callable(reference) else np.asarray(reference, dtype=float)
    if truth.ndim == 2:
        truth = truth[None]
    if truth.shape[0] != starts.shape[0] or truth.shape[1] < L:
        raise ValueError(f"reference provides {truth.shape[1]} lags for {truth.shape[0]} starts; need {L} for {starts.shape[0]}")
    truth = truth[:, :L]
    per_start = path_errors(predict_path(model, G, starts, L), truth)
    reps = bootstrap_means(per_start, replicates, seed)
    return ReconstructionReport(method, m if m is not None else model.K.shape[0], xi, L, per_start, reps)
