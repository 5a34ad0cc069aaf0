"""Independent straight-line oracles shared by the unit and acceptance tests."""

import math

import numpy as np

# N=3 transition pairs in 2-D and a two-feature bump basis
TOY_N3 = ([[0.3, -0.4], [1.1, 0.2], [-0.7, 0.9]],
          [[0.5, -0.1], [0.8, 0.6], [-0.2, 0.4]],
          [[0.9, -0.3], [-0.5, 0.7]], [0.2, -0.6])


def _sym2_eig(a, b, d):
    """Eigenpairs of [[a, b], [b, d]] from the characteristic polynomial, descending."""
    mid, rad = (a + d) / 2, math.sqrt(((a - d) / 2) ** 2 + b * b)
    pairs = []
    for lam in (mid + rad, mid - rad):
        v = np.array([b, lam - a]) if abs(b) > 1e-300 else (np.array([1.0, 0.0]) if abs(lam - a) < abs(lam - d) else np.array([0.0, 1.0]))
        pairs.append((lam, v / math.sqrt(v @ v)))
    return pairs


def brute_force_kvad(X, Y, theta, b, sigma):
    n = len(X)
    chi_raw = lambda x: [math.exp(-((theta[i][0] * x[0] + theta[i][1] * x[1] + b[i]) ** 2)) for i in range(2)]
    raw = [chi_raw(x) for x in X]
    mean = [sum(r[i] for r in raw) / n for i in range(2)]
    c = [[sum((r[i] - mean[i]) * (r[j] - mean[j]) for r in raw) / n for j in range(2)] for i in range(2)]
    # symmetric inverse square root C^{-1/2}
    inv_sqrt = np.zeros((2, 2))
    for lam, v in _sym2_eig(c[0][0], c[0][1], c[1][1]):
        inv_sqrt += np.outer(v, v) / math.sqrt(lam)
    chi = lambda x: (np.array(chi_raw(x)) - mean) @ inv_sqrt
    G = [[math.exp(-((Y[i][0] - Y[j][0]) ** 2 + (Y[i][1] - Y[j][1]) ** 2) / sigma**2) for j in range(n)] for i in range(n)]
    A = np.zeros((2, 2))
    for i in range(n):
        for j in range(n):
            A += G[i][j] * np.outer(chi(X[i]), chi(X[j]))
    (lam1, u1), _ = _sym2_eig(A[0, 0], A[0, 1], A[1, 1])
    f = lambda x: np.array([1.0, chi(x) @ u1])
    fX = np.array([f(x) for x in X])
    fY = np.array([f(y) for y in Y])
    W = fX / n
    K = np.linalg.solve(fX.T @ fX, fX.T @ fY)
    score = (lam1 + sum(map(sum, G))) / n**2
    return {"u": u1, "s": math.sqrt(lam1) / n, "fX": fX, "W": W, "K": K, "score": score,
            "chi": np.array([chi(x) for x in X]), "G": np.array(G)}
