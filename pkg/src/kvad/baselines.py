"""Reference estimators: VAMP on whitened features, kernel EDMD, and the
deterministic-system degeneracy check for the VAMP score."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import DEFAULT_RANK_TOL, WhitenedBasis
from .dynamics import TransitionDataset
from .estimator import RankError, SpectralReport, transition_matrix
from .kernel import KernelSpec, gram

VAMP_REPORT_CLIP = 1.0 + 1e-8


class StochasticDataWarning(UserWarning):
    pass


def vamp_objective(f_X, g_Y) -> float:
    """``tr(2 E[f g'] - E[f f'] E[g g'])`` by empirical averaging over pairs."""
    f_X = np.atleast_2d(np.asarray(f_X, dtype=float))
    g_Y = np.atleast_2d(np.asarray(g_Y, dtype=float))
    n = f_X.shape[0]
    c_fg = f_X.T @ g_Y / n
    c_ff = f_X.T @ f_X / n
    c_gg = g_Y.T @ g_Y / n
    return float(np.trace(2.0 * c_fg - c_ff @ c_gg))


@dataclass(frozen=True)
class LinearFeatureModel:
    """Any feature map paired with a transition matrix acting on it."""

    feature_map: object
    K: np.ndarray
    label: str = ""

    @property
    def m(self) -> int:
        return self.K.shape[0]

    def features(self, X) -> np.ndarray:
        return self.feature_map(np.atleast_2d(np.asarray(X, dtype=float)))


@dataclass(frozen=True)
class VampModel:
    wb_x: WhitenedBasis
    wb_y: WhitenedBasis
    U_x: np.ndarray
    U_y: np.ndarray
    sigma: np.ndarray  # raw singular values, descending

    @property
    def score(self) -> float:
        return float(np.sum(self.sigma**2) + 1.0)

    def features(self, X, m: int | None = None) -> np.ndarray:
        """``(1, chi_x(x) @ U_x[:, :m-1])``."""
        k = self.U_x.shape[1] if m is None else m - 1
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.hstack([np.ones((X.shape[0], 1)), self.wb_x(X) @ self.U_x[:, :k]])

    def linear_model(self, data: TransitionDataset, m: int,
                     rank_tol: float = DEFAULT_RANK_TOL) -> LinearFeatureModel:
        if m - 1 > self.U_x.shape[1]:
            raise RankError(m, self.U_x.shape[1] + 1)

        def fmap(X):
            return self.features(X, m)

        K = transition_matrix(fmap(data.X), fmap(data.Y), rank_tol)
        return LinearFeatureModel(fmap, K, "vamp")

    def report(self, **metadata) -> SpectralReport:
        meta = {"quantity": "singular values of the transfer operator (L2 geometry)"}
        meta.update(metadata)
        return SpectralReport("vamp", np.clip(self.sigma, 0.0, VAMP_REPORT_CLIP), meta)

    def to_dict(self) -> dict:
        return {"method": "vamp", "sigma": self.sigma.tolist(), "score": self.score,
                "U_x": self.U_x.tolist(), "U_y": self.U_y.tolist(),
                "basis_x": self.wb_x.to_dict(), "basis_y": self.wb_y.to_dict()}


def vamp_fit(data: TransitionDataset, wb_x: WhitenedBasis, wb_y: WhitenedBasis,
             k: int | None = None) -> VampModel:
    """SVD of the cross-covariance of whitened features; ``k=None`` keeps all."""
    chi_x = wb_x(data.X)
    chi_y = wb_y(data.Y)
    c_xy = chi_x.T @ chi_y / data.n
    u, s, vt = np.linalg.svd(c_xy, full_matrices=False)
    rank = s.shape[0]
    if k is None:
        k = rank
    if k < 0 or k > rank:
        raise RankError(k, rank)
    return VampModel(wb_x, wb_y, u[:, :k], vt[:k].T, s[:k])


@dataclass(frozen=True)
class EdmdModel:
    """Koopman eigenpairs ``phi(x) = k(x, X) @ coefficients``."""

    eigenvalues: np.ndarray  # complex, descending magnitude
    coefficients: np.ndarray  # (N, k) complex
    X_ref: np.ndarray
    spec: KernelSpec
    ridge: float

    def eigenfunctions(self, X) -> np.ndarray:
        return gram(self.spec, np.atleast_2d(X), self.X_ref).values @ self.coefficients

    def real_features(self, X, m: int) -> np.ndarray:
        """Real span of the leading eigenfunctions, ``m`` columns.

        A complex pair contributes its real and imaginary parts; a pair cut
        by the ``m`` boundary contributes its real part only.
        """
        phi = self.eigenfunctions(X)
        cols, i = [], 0
        while len(cols) < m and i < phi.shape[1]:
            lam = self.eigenvalues[i]
            cols.append(phi[:, i].real)
            if abs(lam.imag) > 0 and len(cols) < m:
                cols.append(phi[:, i].imag)
            i += 2 if (abs(lam.imag) > 0 and i + 1 < phi.shape[1]
                       and np.isclose(self.eigenvalues[i + 1], np.conj(lam))) else 1
        if len(cols) < m:
            raise RankError(m, len(cols))
        return np.column_stack(cols)

    def linear_model(self, data: TransitionDataset, m: int,
                     rank_tol: float = DEFAULT_RANK_TOL) -> LinearFeatureModel:
        def fmap(X):
            return self.real_features(X, m)

        K = transition_matrix(fmap(data.X), fmap(data.Y), rank_tol)
        return LinearFeatureModel(fmap, K, "edmd")

    def report(self, **metadata) -> SpectralReport:
        meta = {"quantity": "eigenvalue magnitudes of the transfer operator", "ridge": self.ridge}
        meta.update(metadata)
        return SpectralReport("edmd", np.abs(self.eigenvalues), meta)

    def to_dict(self) -> dict:
        return {"method": "edmd", "ridge": self.ridge, "kernel": self.spec.to_dict(),
                "eigenvalues_re": self.eigenvalues.real.tolist(),
                "eigenvalues_im": self.eigenvalues.imag.tolist(),
                "abs_eigenvalues": np.abs(self.eigenvalues).tolist()}


def sort_eigen(vals, vecs):
    """Descending magnitude; conjugate pairs adjacent, positive imaginary part first."""
    mag = np.round(np.abs(vals), 12)
    imag = np.round(vals.imag, 12)
    # complex pairs go before real values of equal magnitude so a pair is never split
    order = np.lexsort((-imag, -np.abs(imag), -mag))
    return vals[order], vecs[:, order]


def edmd_fit(data: TransitionDataset, spec: KernelSpec, ridge: float = 1e-6,
             k: int | None = None) -> EdmdModel:
    """Kernel EDMD: eigenpairs of ``(G_xx + ridge * N * mean(diag) * I)^-1 G_yx``.

    ``G_yx[i, j] = k(y_i, x_j)``, so the matrix acts on coefficient vectors
    of functions ``sum_j a_j k(x_j, .)``.
    """
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    n = data.n
    G_xx = gram(spec, data.X).values
    G_yx = gram(spec, data.Y, data.X).values
    reg = G_xx + ridge * n * float(np.mean(np.diag(G_xx))) * np.eye(n)
    if np.linalg.cond(reg) > 1.0 / (np.finfo(float).eps * n):
        raise np.linalg.LinAlgError("regularized Gram matrix is numerically singular; increase the ridge")
    A = np.linalg.solve(reg, G_yx)
    vals, vecs = sort_eigen(*np.linalg.eig(A))
    if k is not None:
        if k > n:
            raise RankError(k, n)
        vals, vecs = vals[:k], vecs[:, :k]
    return EdmdModel(vals, vecs, data.X.copy(), spec, ridge)


def prop1_verifier(data: TransitionDataset, wb_y: WhitenedBasis, m: int, images=None) -> float:
    """VAMP score of ``f_i(x) = g_i(flow(x))`` with ``g`` the first ``m`` whitened end-state features.

    ``images`` are the noise-free flow images of ``data.X``; by default
    ``data.Y`` is taken to be them, which is exact for deterministic data.
    On deterministic data the score equals ``m`` exactly.
    """
    if m < 1 or m > wb_y.effective_dim:
        raise RankError(m, wb_y.effective_dim)
    if images is None:
        _warn_if_stochastic(data)
        images = data.Y
    g = wb_y(data.Y)[:, :m]
    f = wb_y(images)[:, :m]
    return vamp_objective(f, g)


def _warn_if_stochastic(data):
    _, first, inverse = np.unique(data.X, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    if np.any(data.Y != data.Y[first][inverse]):
        warnings.warn("repeated start states map to different end states; data look stochastic",
                      StochasticDataWarning, stacklevel=3)
