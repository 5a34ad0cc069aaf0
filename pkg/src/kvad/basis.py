"""Random ridge-bump features and their whitening transform."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-10


class DegenerateBasisError(ValueError):
    pass


@dataclass(frozen=True)
class RandomBumpBasis:
    """Features ``chi_i(x) = exp(-(theta_i . x + b_i)^2)``."""

    theta: np.ndarray  # (M, D)
    b: np.ndarray  # (M,)

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if theta.shape[0] < 1 or theta.shape[0] != b.shape[0]:
            raise ValueError("need M >= 1 directions with one offset each")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(b))):
            raise ValueError("basis parameters must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "b", b)

    @property
    def M(self) -> int:
        return self.theta.shape[0]

    @property
    def D(self) -> int:
        return self.theta.shape[1]

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.D:
            raise ValueError(f"basis expects dimension {self.D}, got {X.shape[1]}")
        return np.exp(-((X @ self.theta.T + self.b) ** 2))


def make_basis(M: int, D: int, seed: int) -> RandomBumpBasis:
    """Directions and offsets i.i.d. uniform on [-1, 1]."""
    if M < 1 or D < 1:
        raise ValueError("M and D must be positive")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-1.0, 1.0, size=(M, D))
    b = rng.uniform(-1.0, 1.0, size=M)
    return RandomBumpBasis(theta, b)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class WhitenedBasis:
    """Affine map ``(raw(x) - mean) @ transform`` of a raw feature map.

    ``inner`` is any callable mapping an ``(N, D)`` array to ``(N, M)`` features;
    usually a :class:`RandomBumpBasis`.
    """

    inner: object
    mean: np.ndarray  # (M,)
    transform: np.ndarray  # (M, M')
    eigenvalues: np.ndarray  # retained covariance eigenvalues, descending
    offset: np.ndarray | None = None  # (M',) round-off residue of the mean, subtracted after the transform

    @property
    def effective_dim(self) -> int:
        return self.transform.shape[1]

    def __call__(self, X) -> np.ndarray:
        return evaluate(self, X)

    def to_dict(self) -> dict:
        d = {"mean": self.mean.tolist(), "transform": self.transform.tolist(),
             "eigenvalues": self.eigenvalues.tolist()}
        if self.offset is not None:
            d["offset"] = self.offset.tolist()
        if isinstance(self.inner, RandomBumpBasis):
            d["theta"] = self.inner.theta.tolist()
            d["b"] = self.inner.b.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WhitenedBasis":
        inner = RandomBumpBasis(np.array(d["theta"]), np.array(d["b"]))
        transform = np.array(d["transform"], dtype=float).reshape(inner.M, -1)
        offset = np.array(d["offset"], dtype=float) if "offset" in d else None
        return cls(inner, np.array(d["mean"], dtype=float), transform,
                   np.array(d.get("eigenvalues", []), dtype=float), offset)


def whiten_features(raw: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL):
    """Mean and ``C^{-1/2}`` transform for a raw ``(N, M)`` feature matrix.

    Works from the SVD of the centred features, whose right singular vectors
    and squared singular values / N are the eigenpairs of the covariance C.
    This keeps the whitened moments accurate even when C is badly conditioned.
    Directions with eigenvalue below ``rank_tol * lambda_max`` are dropped.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    n = raw.shape[0]
    if n < 2:
        raise ValueError("whitening needs at least two samples")
    mean = raw.mean(axis=0)
    centred = raw - mean
    _, sv, vt = np.linalg.svd(centred, full_matrices=False)
    eig = sv**2 / n
    if sv.size == 0 or sv[0] <= 1e-12 * max(1.0, np.abs(raw).max()) * np.sqrt(n):
        raise DegenerateBasisError("degenerate basis: all features are constant on the sample")
    keep = eig >= rank_tol * eig[0]
    vecs = fix_signs(vt[keep].T)
    transform = vecs / np.sqrt(eig[keep])
    return mean, transform, eig[keep]


def fit_whitening(basis, X, rank_tol: float = DEFAULT_RANK_TOL) -> WhitenedBasis:
    """Fit the whitening of ``basis`` on sample ``X`` (mean zero, identity second moment)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise ValueError("whitening needs N > 1 samples")
    mean, transform, eig = whiten_features(basis(X), rank_tol)
    wb = WhitenedBasis(basis, mean, transform, eig)
    # large transform entries amplify the round-off left in the centred mean
    residue = evaluate(wb, X).mean(axis=0)
    return WhitenedBasis(basis, mean, transform, eig, residue)


def evaluate(wb: WhitenedBasis, X) -> np.ndarray:
    raw = wb.inner(np.atleast_2d(np.asarray(X, dtype=float)))
    if raw.shape[1] != wb.mean.shape[0]:
        raise ValueError("raw feature count disagrees with the fitted whitening")
    out = (raw - wb.mean) @ wb.transform
    return out if wb.offset is None else out - wb.offset
