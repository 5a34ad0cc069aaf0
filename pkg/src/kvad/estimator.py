"""Kernel-embedding variational estimator of low-dimensional transfer-operator models.

Given transition pairs ``(x_n, y_n)``, a whitened basis ``chi`` and a kernel,
the model is the transition density ``p(x, y) = f(x) . q(y)`` with

* ``f(x) = (1, chi(x) @ U)``, ``U`` the top ``m - 1`` eigenvectors of
  ``chi(X).T @ G_yy @ chi(X)``,
* ``q_i = sum_n W[n, i] * delta(y_n)`` with ``W[n] = f(x_n) / N``,
* ``K = pinv(f(X)) @ f(Y)``.

Singular values are reported as ``s_i = sqrt(eig_i) / N``, which makes them
and the score independent of the sample size.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import DEFAULT_RANK_TOL, WhitenedBasis, fix_signs
from .dynamics import TransitionDataset
from .kernel import KernelSpec, gram


class RankError(ValueError):
    """Requested model dimension exceeds what the data and basis support."""

    def __init__(self, requested: int, achievable: int):
        self.requested = requested
        self.achievable = achievable
        super().__init__(f"model dimension m={requested} exceeds the achievable maximum {achievable}")


@dataclass
class SpectralReport:
    method: str
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "value"])
            for i, v in enumerate(self.values, start=1):
                w.writerow([i, repr(float(v))])


@dataclass(frozen=True)
class KvadModel:
    wb: WhitenedBasis
    U: np.ndarray  # (M', m-1)
    S: np.ndarray  # (m-1,)
    eigenvalues: np.ndarray  # raw eigenvalues of chi(X)' G_yy chi(X) that produced S
    W: np.ndarray  # (N, m)
    K: np.ndarray  # (m, m)
    Y_ref: np.ndarray  # (N, D)
    score: float
    spec: KernelSpec
    rank_tol: float = DEFAULT_RANK_TOL

    @property
    def m(self) -> int:
        return self.U.shape[1] + 1

    def features(self, X) -> np.ndarray:
        """``f(X)`` as an ``(N, m)`` array; column 0 is the constant 1."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.hstack([np.ones((X.shape[0], 1)), self.wb(X) @ self.U])

    def to_dict(self) -> dict:
        return {
            "method": "kvad", "m": self.m, "score": self.score,
            "S": self.S.tolist(), "eigenvalues": self.eigenvalues.tolist(),
            "U": self.U.tolist(), "W": self.W.tolist(), "K": self.K.tolist(),
            "y_ref": self.Y_ref.tolist(), "kernel": self.spec.to_dict(),
            "rank_tol": self.rank_tol, "basis": self.wb.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KvadModel":
        wb = WhitenedBasis.from_dict(d["basis"])
        m = int(d["m"])
        return cls(
            wb=wb, U=np.array(d["U"], dtype=float).reshape(wb.effective_dim, m - 1),
            S=np.array(d["S"], dtype=float), eigenvalues=np.array(d["eigenvalues"], dtype=float),
            W=np.array(d["W"], dtype=float), K=np.array(d["K"], dtype=float),
            Y_ref=np.array(d["y_ref"], dtype=float), score=float(d["score"]),
            spec=KernelSpec.from_dict(d["kernel"]), rank_tol=float(d["rank_tol"]),
        )


@dataclass(frozen=True)
class FixedFeatureModel:
    """Model for a user-supplied feature map, with the optimal nonparametric ``q``."""

    feature_map: Callable[[np.ndarray], np.ndarray]
    W: np.ndarray
    K: np.ndarray
    Y_ref: np.ndarray
    score: float

    @property
    def m(self) -> int:
        return self.W.shape[1]

    def features(self, X) -> np.ndarray:
        return np.atleast_2d(self.feature_map(np.atleast_2d(np.asarray(X, dtype=float))))


def stable_pinv(a, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """SVD pseudo-inverse with relative cutoff ``rank_tol``."""
    try:
        return np.linalg.pinv(a, rcond=rank_tol)
    except np.linalg.LinAlgError:
        # gesdd can fail on exactly clustered singular values (whitened features); the transpose converges
        return np.linalg.pinv(a.T, rcond=rank_tol).T


def transition_matrix(f_X, f_Y, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Least-squares ``K`` with ``f(Y) ~ f(X) @ K`` via an SVD pseudo-inverse."""
    f_X = np.atleast_2d(np.asarray(f_X, dtype=float))
    f_Y = np.atleast_2d(np.asarray(f_Y, dtype=float))
    if f_X.shape != f_Y.shape:
        raise ValueError(f"feature shapes differ: {f_X.shape} vs {f_Y.shape}")
    return stable_pinv(f_X, rank_tol) @ f_Y


def optimal_q_weights(f_values, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Point-mass weights ``W[n] = pinv(C_ff) f(x_n) / N`` of the optimal density basis."""
    f = np.atleast_2d(np.asarray(f_values, dtype=float))
    n = f.shape[0]
    c_ff = f.T @ f / n
    if not np.any(np.abs(c_ff) > 0):
        raise ValueError("C_ff is zero: no feature direction can be retained")
    return f @ np.linalg.pinv(c_ff, rcond=rank_tol, hermitian=True) / n


def kvad_objective(f_X, W, G_yy) -> float:
    """Score ``tr(2 C_fq - C_ff C_qq)`` for ``q`` given as point masses on the end states.

    ``W`` holds the weights of each ``q_j`` on ``y_1..y_N``; the image of
    ``f_i rho_0`` under the empirical transfer operator is ``f_i(x_n) / N`` on ``y_n``.
    """
    f_X = np.atleast_2d(f_X)
    n = f_X.shape[0]
    c_ff = f_X.T @ f_X / n
    c_qq = W.T @ G_yy @ W
    c_fq = f_X.T @ G_yy @ W / n
    return float(np.trace(2.0 * c_fq - c_ff @ c_qq))


def _eig_descending(A):
    A = 0.5 * (A + A.T)
    vals, vecs = np.linalg.eigh(A)
    order = np.argsort(vals, kind="stable")[::-1]
    return np.clip(vals[order], 0.0, None), fix_signs(vecs[:, order])


def kvad_fit(data: TransitionDataset, wb: WhitenedBasis, spec: KernelSpec, m: int,
             rank_tol: float = DEFAULT_RANK_TOL, G_yy=None) -> KvadModel:
    """Fit the m-dimensional model. ``G_yy`` may be passed to reuse a Gram matrix."""
    n = data.n
    achievable = min(wb.effective_dim + 1, n)
    if m < 1:
        raise ValueError("model dimension must be at least 1")
    if m > achievable:
        raise RankError(m, achievable)
    if G_yy is None:
        G_yy = gram(spec, data.Y).values
    if not np.all(np.isfinite(G_yy)):
        raise FloatingPointError("Gram matrix has non-finite entries")
    chi = wb(data.X)
    eig, vecs = _eig_descending(chi.T @ (G_yy @ chi))
    U = vecs[:, : m - 1]
    top = eig[: m - 1]
    S = np.sqrt(top) / n
    const = float(np.sum(G_yy)) / n**2
    f_X = np.hstack([np.ones((n, 1)), chi @ U])
    f_Y = np.hstack([np.ones((n, 1)), wb(data.Y) @ U])
    W = f_X / n  # C_ff = I by construction
    K = transition_matrix(f_X, f_Y, rank_tol)
    score = float(np.sum(top)) / n**2 + const
    return KvadModel(wb, U, S, top, W, K, data.Y.copy(), score, spec, rank_tol)


def fit_fixed_features(data: TransitionDataset, feature_map, spec: KernelSpec,
                       rank_tol: float = DEFAULT_RANK_TOL) -> FixedFeatureModel:
    """Optimal ``q`` and ``K`` for a given ``f`` (no constraint on ``C_ff``)."""
    f_X = np.atleast_2d(feature_map(data.X))
    f_Y = np.atleast_2d(feature_map(data.Y))
    W = optimal_q_weights(f_X, rank_tol)
    G_yy = gram(spec, data.Y).values
    score = kvad_objective(f_X, W, G_yy)
    return FixedFeatureModel(feature_map, W, transition_matrix(f_X, f_Y, rank_tol),
                             data.Y.copy(), score)


def kvad_score(model: KvadModel, data: TransitionDataset, spec: KernelSpec | None = None) -> float:
    """Recompute the score of ``model`` on ``data`` from the Gram matrix."""
    spec = spec or model.spec
    n = data.n
    G = gram(spec, data.Y).values
    chi_u = model.wb(data.X) @ model.U
    return float(np.trace(chi_u.T @ G @ chi_u) + np.sum(G)) / n**2


def transition_weights(model, x_query) -> np.ndarray:
    """Weights ``w_n(x) = f(x) . W[n]`` of the predicted density on the stored end states."""
    return model.features(x_query) @ model.W.T


def conditional_expectation(model, h_values, x_query) -> np.ndarray:
    """Model prediction of ``E[h(y) | x]`` from ``h`` evaluated on the stored end states.

    A single query state gives a length-k vector; an ``(Q, D)`` batch gives ``(Q, k)``.
    """
    h = np.asarray(h_values, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    if h.shape[0] != model.W.shape[0]:
        raise ValueError(f"h has {h.shape[0]} rows, model stores {model.W.shape[0]} end states")
    xq = np.asarray(x_query, dtype=float)
    single = xq.ndim == 1
    out = transition_weights(model, np.atleast_2d(xq)) @ h
    return out[0] if single else out


def diffusion_coordinates(model: KvadModel, X) -> np.ndarray:
    """Embedding ``(s_1 f_2(x), ..., s_{m-1} f_m(x))``."""
    return model.features(X)[:, 1:] * model.S


def diffusion_distance(model: KvadModel, x, x_other) -> float:
    a = diffusion_coordinates(model, np.atleast_2d(x))[0]
    b = diffusion_coordinates(model, np.atleast_2d(x_other))[0]
    return float(np.sqrt(np.sum((a - b) ** 2)))


def singular_report(model: KvadModel, **metadata) -> SpectralReport:
    """Estimated singular values of the mean-free transfer operator."""
    meta = {"m": model.m, "N": model.W.shape[0], "sigma": model.spec.sigma,
            "quantity": "singular values of the mean-free operator"}
    meta.update(metadata)
    return SpectralReport("kvad", model.S.copy(), meta)
