"""Down-selection of fitted models by selection-window correlation and
combination of survivors by timewise trimmed mean or sqrt-n-best averaging.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .regress import LinearModel, pearson

TOP_FRACTION = "TOP_FRACTION"
MIN_CORR = "MIN_CORR"


class EnsembleError(ValueError):
    """Raised for misaligned inputs or selections that empty the pool."""


@dataclass(frozen=True)
class SelectionRule:
    mode: str
    q: float = 0.4
    r_t: float = -1.0

    def __post_init__(self):
        if self.mode not in (TOP_FRACTION, MIN_CORR):
            raise EnsembleError(f"unknown selection mode {self.mode!r}")
        if self.mode == TOP_FRACTION and not 0.0 < self.q <= 1.0:
            raise EnsembleError("q must be in (0, 1]")
        if self.mode == MIN_CORR and not -1.0 <= self.r_t <= 1.0:
            raise EnsembleError("r_t must be in [-1, 1]")


@dataclass(frozen=True)
class ScoredPool:
    """Models sorted descending by selection-window correlation.

    Zero-variance predictions score -inf and sort last; ties break by
    ascending map_id for determinism.
    """

    models: tuple[LinearModel, ...]
    select_corr: tuple[float, ...]

    def __post_init__(self):
        if len(self.models) != len(self.select_corr):
            raise EnsembleError("one score per model required")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "select_corr", tuple(self.select_corr))

    def __len__(self) -> int:
        return len(self.models)


def score_models(
    models: list[LinearModel],
    predictions_on_select: list[np.ndarray],
    observed: np.ndarray,
) -> ScoredPool:
    """Rank models by Pearson correlation of predictions vs observations."""
    observed = np.asarray(observed, dtype=np.float64)
    if len(models) != len(predictions_on_select):
        raise EnsembleError("one prediction vector per model required")
    scores = []
    for m, p in zip(models, predictions_on_select):
        p = np.asarray(p, dtype=np.float64)
        if p.shape != observed.shape:
            raise EnsembleError(
                f"prediction length {p.shape} vs observed {observed.shape}"
            )
        r = pearson(p, observed)
        scores.append(-math.inf if math.isnan(r) else r)
    order = sorted(range(len(models)), key=lambda i: (-scores[i], models[i].map_id))
    return ScoredPool(
        tuple(models[i] for i in order), tuple(scores[i] for i in order)
    )


def downselect(pool: ScoredPool, rule: SelectionRule) -> ScoredPool:
    """Keep the ceil(q*n) best (TOP_FRACTION) or all with score >= r_t
    (MIN_CORR; r_t = -1 keeps everything)."""
    if len(pool) == 0:
        raise EnsembleError("cannot down-select an empty pool")
    if rule.mode == TOP_FRACTION:
        keep = math.ceil(rule.q * len(pool))
    else:
        keep = sum(1 for r in pool.select_corr if r >= rule.r_t)
        if keep == 0:
            raise EnsembleError(
                f"no model reaches min correlation {rule.r_t}; relax r_t"
            )
    return ScoredPool(pool.models[:keep], pool.select_corr[:keep])


def trimmed_mean_prediction(values: np.ndarray, trim: float = 0.2) -> float:
    """Mean after dropping floor(trim*m) values from each tail, at one time
    step (the cross-model reading of a timewise trimmed mean)."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    m = values.size
    if m < 1:
        raise EnsembleError("need at least one prediction")
    if not 0.0 <= trim < 0.5:
        raise EnsembleError("trim must be in [0, 0.5)")
    drop = int(trim * m)
    return float(values[drop : m - drop].mean())


def trimmed_mean_series(per_model_predictions: np.ndarray, trim: float = 0.2) -> np.ndarray:
    """Timewise trimmed mean over an m x T prediction matrix."""
    P = np.atleast_2d(np.asarray(per_model_predictions, dtype=np.float64))
    m = P.shape[0]
    drop = int(trim * m)
    S = np.sort(P, axis=0)
    return S[drop : m - drop].mean(axis=0)


def sqrt_n_best_average(pool: ScoredPool, predictions_at_t: np.ndarray) -> float:
    """Mean of the floor(sqrt(n)) top-ranked models' predictions."""
    if len(pool) == 0:
        raise EnsembleError("empty pool")
    k = max(1, int(math.isqrt(len(pool))))
    values = np.asarray(predictions_at_t, dtype=np.float64)
    if values.size != len(pool):
        raise EnsembleError("one prediction per pooled model required")
    return float(values[:k].mean())


def sqrt_n_best_series(pool: ScoredPool, per_model_predictions: np.ndarray) -> np.ndarray:
    """sqrt-n-best averaging applied at every time step; rows must follow the
    pool's rank order."""
    P = np.atleast_2d(np.asarray(per_model_predictions, dtype=np.float64))
    if P.shape[0] != len(pool):
        raise EnsembleError("one prediction row per pooled model required")
    k = max(1, int(math.isqrt(len(pool))))
    return P[:k].mean(axis=0)


def save_pool_csv(pool: ScoredPool, kept: ScoredPool, path) -> None:
    """(map_id, method, select_corr, kept_flag) for every scored model."""
    kept_ids = {m.map_id for m in kept.models}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["map_id", "method", "select_corr", "kept_flag"])
        for m, r in zip(pool.models, pool.select_corr):
            writer.writerow([m.map_id, m.method, repr(r), int(m.map_id in kept_ids)])
