"""Gaussian kernel, blocked Gram matrices and kernel-embedding distances.

The Gaussian kernel ``exp(-|x - y|^2 / sigma^2)`` is universal and bounded by
one; universality is assumed, not checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BLOCK = 256


@dataclass(frozen=True)
class KernelSpec:
    sigma: float
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported kernel kind {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("kernel bandwidth must be positive")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(sigma=float(d["sigma"]), kind=d.get("kind", "gaussian"))


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    symmetric: bool


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(np.exp(-np.sum((x - y) ** 2) / spec.sigma**2))


def gram(spec: KernelSpec, A, B=None, block: int = DEFAULT_BLOCK) -> GramMatrix:
    """Kernel values ``k(A[i], B[j])``, computed ``block`` rows at a time.

    Passing ``B=None`` (or ``B is A``) marks the result symmetric.
    """
    symmetric = B is None or B is A
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if symmetric else np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]} columns")
    out = np.empty((A.shape[0], B.shape[0]))
    inv = 1.0 / spec.sigma**2
    for start in range(0, A.shape[0], block):
        stop = min(start + block, A.shape[0])
        # explicit differences keep the result exactly symmetric with unit diagonal
        diff = A[start:stop, None, :] - B[None, :, :]
        np.exp(-np.einsum("ijk,ijk->ij", diff, diff) * inv, out=out[start:stop])
    return GramMatrix(out, symmetric)


def _weighted(points, weights):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float).ravel()
    if points.shape[0] == 0:
        raise ValueError("empty point set")
    if weights.shape[0] != points.shape[0]:
        raise ValueError("need one weight per point")
    return points, weights


def embedding_distance_sq(spec: KernelSpec, p, q) -> float:
    """Squared RKHS distance between two signed point-mass measures.

    ``p`` and ``q`` are ``(points, weights)`` pairs.
    """
    zp, wp = _weighted(*p)
    zq, wq = _weighted(*q)
    if zp.shape[1] != zq.shape[1]:
        raise ValueError("point sets live in different dimensions")
    pp = wp @ gram(spec, zp).values @ wp
    qq = wq @ gram(spec, zq).values @ wq
    pq = wp @ gram(spec, zp, zq).values @ wq
    value = pp + qq - 2.0 * pq
    if value < 0:
        if value < -1e-12 * max(1.0, abs(pp) + abs(qq)):
            raise ArithmeticError(f"embedding distance is negative beyond round-off: {value}")
        value = 0.0
    return float(value)


# -- uniform-box comparison (VAMP vs kernel geometry) ---------------------

DOMAIN = (-5.0, 5.0)
REFERENCE_DENSITY = 0.1  # uniform density of the end-state distribution on DOMAIN
HALF_WIDTH = 0.1
HEIGHT = 1.0 / (2 * HALF_WIDTH)


def _gauss_legendre_panels(breaks, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        half = 0.5 * (b - a)
        xs.append(0.5 * (a + b) + half * nodes)
        ws.append(half * weights)
    return np.concatenate(xs), np.concatenate(ws)


def _refined(breaks, times):
    breaks = np.asarray(breaks, dtype=float)
    for _ in range(times):
        mids = 0.5 * (breaks[:-1] + breaks[1:])
        breaks = np.sort(np.concatenate([breaks, mids]))
    return breaks


def _box_kernel_integral(a, b, c, d, sigma, tol=1e-7, order=8, max_level=12):
    """``int_a^b int_c^d exp(-(y - y')^2 / sigma^2) dy' dy`` by tensor Gauss-Legendre."""
    previous = None
    for level in range(max_level):
        y, wy = _gauss_legendre_panels(_refined([a, b], level), order)
        z, wz = _gauss_legendre_panels(_refined([c, d], level), order)
        value = wy @ np.exp(-((y[:, None] - z[None, :]) ** 2) / sigma**2) @ wz
        if previous is not None and abs(value - previous) < tol:
            return value
        previous = value
    return value


def _box_vamp_distance(c, order=4):
    # Piecewise-constant integrand on breakpoints of both supports: a single
    # Gauss-Legendre pass is exact, the second confirms it.
    lo, hi = min(-HALF_WIDTH, c - HALF_WIDTH), max(HALF_WIDTH, c + HALF_WIDTH)
    breaks = np.unique([lo, -HALF_WIDTH, HALF_WIDTH, c - HALF_WIDTH, c + HALF_WIDTH, hi])

    def integrate(level):
        y, w = _gauss_legendre_panels(_refined(breaks, level), order)
        p = HEIGHT * (np.abs(y) <= HALF_WIDTH)
        p_hat = HEIGHT * (np.abs(y - c) <= HALF_WIDTH)
        return w @ ((p - p_hat) ** 2 / REFERENCE_DENSITY)

    previous = integrate(0)
    for level in range(1, 8):
        value = integrate(level)
        if abs(value - previous) < 1e-7:
            return value
        previous = value
    return value


def box_distances(c: float, sigma: float = 1.0) -> tuple[float, float]:
    """Distances between uniform densities on ``[-0.1, 0.1]`` and ``[c - 0.1, c + 0.1]``.

    Returns ``(vamp_sq, kernel_sq)``: the squared distance weighted by the inverse
    reference density 0.1 on ``[-5, 5]``, and the squared kernel-embedding distance.
    """
    if abs(c) > DOMAIN[1] - HALF_WIDTH + 1e-12:
        raise ValueError(f"c={c} moves the support outside {DOMAIN}")
    if c == 0:
        return 0.0, 0.0
    h = HALF_WIDTH
    same = _box_kernel_integral(-h, h, -h, h, sigma)
    cross = _box_kernel_integral(-h, h, c - h, c + h, sigma)
    # both boxes have the same self-term by translation invariance
    kernel_sq = HEIGHT**2 * (2.0 * same - 2.0 * cross)
    return float(_box_vamp_distance(c)), float(max(kernel_sq, 0.0))


def fig1_distances(c_grid, sigma: float = 1.0) -> list[tuple[float, float, float]]:
    """Rows ``(c, vamp_sq, kernel_sq)`` for each ``c`` in the grid."""
    rows = []
    for c in c_grid:
        c = float(c)
        vamp_sq, kernel_sq = box_distances(c, sigma)
        rows.append((c, vamp_sq, kernel_sq))
    return rows


def write_fig1_csv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("c,vamp_sq,kernel_sq\n")
        for c, v, k in rows:
            fh.write(f"{c:.10g},{v:.17g},{k:.17g}\n")
