"""Pure-numpy implementations of the hot kernels.

Mirrors the API of the compiled extension ``_ckernels``; one of the two is
selected at import by :mod:`chaoscast.backend`.
"""

from __future__ import annotations

import numpy as np


def lorenz63_trajectory(
    state0: np.ndarray, sigma: float, rho: float, beta: float, dt: float, n_steps: int
) -> np.ndarray:
    """Fixed-step RK4 integration of the three-variable Lorenz system.

    Returns an (n_steps + 1) x 3 array including the initial state.
    """

    def f(s):
        x, y, z = s
        return np.array(
            [sigma * (y - x), x * (rho - z) - y, x * y - beta * z]
        )

    out = np.empty((n_steps + 1, 3))
    s = np.asarray(state0, dtype=np.float64).copy()
    out[0] = s
    for t in range(n_steps):
        k1 = f(s)
        k2 = f(s + 0.5 * dt * k1)
        k3 = f(s + 0.5 * dt * k2)
        k4 = f(s + dt * k3)
        s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[t + 1] = s
    return out


def lorenz96_trajectory(
    state0: np.ndarray, forcing: float, dt: float, n_steps: int
) -> np.ndarray:
    """Fixed-step RK4 integration of the D-variable Lorenz-96 system."""

    def f(s):
        return (np.roll(s, -1) - np.roll(s, 2)) * np.roll(s, 1) - s + forcing

    s = np.asarray(state0, dtype=np.float64).copy()
    out = np.empty((n_steps + 1, s.size))
    out[0] = s
    for t in range(n_steps):
        k1 = f(s)
        k2 = f(s + 0.5 * dt * k1)
        k3 = f(s + 0.5 * dt * k2)
        k4 = f(s + dt * k3)
        s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[t + 1] = s
    return out


def skill_statistic_batch(
    Ms: np.ndarray, top_k: int, conditional: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Conditional-vs-independence statistic for a batch of binary matrices.

    For each n_models x n_seasons matrix M: G = M^T M; upper-triangle
    conditional rates CP[i,j] = G[i,j]/G[i,i]; reference P is the outer
    product of base rates diag(G)/n (or P[i,j] = b[j] in the conditional
    variant); Z = (CP-P)/sqrt(P(1-P)/n).  The statistic is the sum of the
    ``top_k`` largest finite Z entries (all of them when fewer exist; 0.0
    when none exist).

    Returns (statistics, used_counts), each of length batch.
    """
    Ms = np.asarray(Ms, dtype=np.float64)
    B, n, s = Ms.shape
    G = Ms.transpose(0, 2, 1) @ Ms
    diag = np.einsum("bii->bi", G)
    b = diag / n
    iu, ju = np.triu_indices(s, k=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cp = G[:, iu, ju] / diag[:, iu]
        P = b[:, ju] if conditional else b[:, iu] * b[:, ju]
        z = (cp - P) / np.sqrt(P * (1.0 - P) / n)
    ok = (diag[:, iu] > 0) & (P > 0.0) & (P < 1.0)
    z = np.where(ok, z, -np.inf)

    zs = -np.sort(-z, axis=1)
    finite = np.isfinite(zs)
    used = np.minimum(top_k, finite.sum(axis=1)).astype(np.int64)
    cum = np.cumsum(np.where(finite, zs, 0.0), axis=1)
    stats = np.where(
        used > 0, cum[np.arange(B), np.maximum(used, 1) - 1], 0.0
    )
    return stats, used
