"""Binary skill matrices, the conditional column-permutation test, and
Benjamini-Hochberg FDR screening.

The skill matrix marks, per prediction sequence and season, whether the
ensemble's predictive density beat the historic (climatological) density at
the observed value.  The permutation test asks whether sequences that
predict well in one season are disproportionately likely to predict well in
later seasons, against a null built by permuting each season's column
independently.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import backend


class SkillError(ValueError):
    """Raised for degenerate matrices or malformed inputs."""


@dataclass(frozen=True)
class SkillMatrix:
    M: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        M = np.asarray(self.M, dtype=np.uint8)
        if M.ndim != 2:
            raise SkillError("M must be 2-d (models x seasons)")
        if not np.all((self.M == 0) | (self.M == 1)):
            raise SkillError("M entries must be 0 or 1")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        if len(self.row_labels) != M.shape[0] or len(self.col_labels) != M.shape[1]:
            raise SkillError("label counts must match matrix shape")


@dataclass(frozen=True)
class ConditionalTestResult:
    statistic: float
    p_value: float
    CP: np.ndarray
    P: np.ndarray
    Z: np.ndarray
    top_k: int
    n_used: int  # finite Z entries actually summed (== top_k unless fewer exist)
    n_perm: int
    seed: int


def silverman_bandwidth(sample: np.ndarray, floor_scale: float = 1e-9) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), floored at
    floor_scale * (range + 1) so zero-spread samples stay usable."""
    sample = np.asarray(sample, dtype=np.float64)
    n = sample.size
    sd = float(np.std(sample, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(sample, [75, 25])
    iqr = float(q75 - q25)
    spread = min(x for x in (sd, iqr / 1.34) if x > 0) if (sd > 0 or iqr > 0) else 0.0
    h = 0.9 * spread * n ** (-0.2)
    h_floor = floor_scale * (float(np.ptp(sample)) + 1.0)
    return max(h, h_floor)


def gaussian_kde_at(x0: float, sample: np.ndarray, bandwidth: float | None = None) -> float:
    """Gaussian-kernel density estimate of ``sample`` evaluated at x0."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.size < 2:
        raise SkillError("need at least 2 sample points for a density")
    h = silverman_bandwidth(sample) if bandwidth is None else bandwidth
    u = (x0 - sample) / h
    return float(np.exp(-0.5 * u * u).sum() / (sample.size * h * math.sqrt(2 * math.pi)))


def binary_skill_matrix(
    ensemble_member_predictions: np.ndarray,
    observed: np.ndarray,
    historic_sample: np.ndarray,
    row_labels: tuple[str, ...] | None = None,
    col_labels: tuple[str, ...] | None = None,
) -> SkillMatrix:
    """Entry [i, t] = 1 iff the density of sequence i's ensemble members at
    season t assigns the observed value strictly higher likelihood than the
    historic-sample density does.

    ``ensemble_member_predictions`` has shape (sequences, seasons, members).
    """
    E = np.asarray(ensemble_member_predictions, dtype=np.float64)
    if E.ndim != 3 or E.shape[2] < 2:
        raise SkillError("need (sequences, seasons, members>=2) predictions")
    observed = np.asarray(observed, dtype=np.float64)
    if observed.shape != (E.shape[1],):
        raise SkillError("one observation per season required")
    hist = np.asarray(historic_sample, dtype=np.float64)
    if hist.size < 2:
        raise SkillError("historic sample needs at least 2 points")
    M = np.zeros(E.shape[:2], dtype=np.uint8)
    for t in range(E.shape[1]):
        hist_like = gaussian_kde_at(float(observed[t]), hist)
        for i in range(E.shape[0]):
            pred_like = gaussian_kde_at(float(observed[t]), E[i, t])
            M[i, t] = 1 if pred_like > hist_like else 0
    rows = row_labels or tuple(f"seq_{i}" for i in range(E.shape[0]))
    cols = col_labels or tuple(f"season_{t}" for t in range(E.shape[1]))
    return SkillMatrix(M, rows, cols)


def _zmatrices(M: np.ndarray, conditional: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Upper-triangular CP, P, Z matrices (NaN where undefined)."""
    n, s = M.shape
    G = M.T.astype(np.float64) @ M.astype(np.float64)
    diag = np.diag(G)
    b = diag / n
    CP = np.full((s, s), np.nan)
    P = np.full((s, s), np.nan)
    Z = np.full((s, s), np.nan)
    for i in range(s):
        for j in range(i + 1, s):
            p = b[j] if conditional else b[i] * b[j]
            P[i, j] = p
            if diag[i] > 0:
                CP[i, j] = G[i, j] / diag[i]
                if 0.0 < p < 1.0:
                    Z[i, j] = (CP[i, j] - p) / math.sqrt(p * (1 - p) / n)
    return CP, P, Z


def conditional_test(
    M: SkillMatrix | np.ndarray,
    top_k: int = 4,
    n_perm: int = 1000,
    seed: int = 0,
    conditional_reference: bool = False,
) -> ConditionalTestResult:
    """Permutation test of predictive coherence across seasons.

    Permutes the entries within each column of M independently ``n_perm``
    times; the p-value is the proportion of permuted statistics >= the
    observed one (so p >= 1/n_perm always).
    """
    A = M.M if isinstance(M, SkillMatrix) else np.asarray(M, dtype=np.uint8)
    if A.ndim != 2 or A.shape[1] < 2:
        raise SkillError("M must be 2-d with at least 2 seasons")
    obs_stats, obs_used = backend.skill_statistic_batch(A[None, :, :], top_k,
                                                        conditional_reference)
    rng = np.random.default_rng(seed)
    reps = np.repeat(A[None, :, :], n_perm, axis=0)
    reps = rng.permuted(reps, axis=1)  # shuffles each column of each replicate
    perm_stats, _ = backend.skill_statistic_batch(reps, top_k, conditional_reference)
    p_value = float(np.count_nonzero(perm_stats >= obs_stats[0]) / n_perm)
    CP, P, Z = _zmatrices(A, conditional_reference)
    return ConditionalTestResult(
        statistic=float(obs_stats[0]),
        p_value=p_value,
        CP=CP,
        P=P,
        Z=Z,
        top_k=top_k,
        n_used=int(obs_used[0]),
        n_perm=n_perm,
        seed=seed,
    )


def fdr_select(p_values, q: float) -> list[int]:
    """Benjamini-Hochberg step-up: indices of all p-values at or below the
    largest rank i with p_(i) <= (i/m) q."""
    p = np.asarray(p_values, dtype=np.float64)
    if np.any((p < 0) | (p > 1)):
        raise SkillError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    threshold = -1.0
    for rank, idx in enumerate(order, start=1):
        if p[idx] <= rank / m * q:
            threshold = p[idx]
    if threshold < 0:
        return []
    return sorted(int(i) for i in np.flatnonzero(p <= threshold))


def save_matrix_csv(sm: SkillMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id"] + list(sm.col_labels))
        for label, row in zip(sm.row_labels, sm.M):
            writer.writerow([label] + [int(v) for v in row])


def load_matrix_csv(path) -> SkillMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = tuple(header[1:])
        rows, labels = [], []
        for cells in reader:
            if not cells:
                continue
            labels.append(cells[0])
            rows.append([int(v) for v in cells[1:]])
    return SkillMatrix(np.array(rows, dtype=np.uint8), tuple(labels), cols)


def save_test_report_csv(results: dict[str, ConditionalTestResult], path) -> None:
    """(label, statistic, p_value, top_k, n_perm, seed) per test."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "statistic", "p_value", "top_k", "n_perm", "seed"])
        for label, r in results.items():
            writer.writerow(
                [label, repr(r.statistic), repr(r.p_value), r.top_k, r.n_perm, r.seed]
            )
