"""Shared fit -> score -> down-select -> combine machinery used by the
forecast command, the sampling comparison, and the trading backtest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import (
    CoordinateUniverse,
    DelayMap,
    build_universe,
    materialize_design,
    sample_disjoint_partitions,
    sample_random_maps,
)
from .ensemble import (
    ScoredPool,
    SelectionRule,
    downselect,
    score_models,
    sqrt_n_best_series,
    trimmed_mean_series,
)
from .regress import fit_lars_cv, fit_ols, predict
from .timeseries import SeriesFrame

OLS_METHOD = "ols"
LARS_CV_METHOD = "lars_cv"

TRIMMED_MEAN = "trimmed_mean"
SQRT_N_BEST = "sqrt_n_best"


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class FitSettings:
    method: str = OLS_METHOD
    cv_folds: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.method not in (OLS_METHOD, LARS_CV_METHOD):
            raise PipelineError(f"unknown fit method {self.method!r}")


def _fit_one(X: np.ndarray, y: np.ndarray, map_id: int, settings: FitSettings):
    if settings.method == OLS_METHOD:
        return fit_ols(X, y, map_id=map_id)
    return fit_lars_cv(X, y, folds=settings.cv_folds, seed=settings.seed, map_id=map_id)


def fit_and_score(
    frame: SeriesFrame,
    maps: list[DelayMap],
    universe_max_lag: int,
    fit_range: range,
    select_range: range,
    settings: FitSettings,
) -> tuple[ScoredPool, dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]]:
    """Fit one model per delay map on the fit range and rank them by
    selection-window correlation.

    All designs are materialized on the universe's common max lag so rows
    align across maps.  Returns the scored pool plus each map's full
    (X, y, times) design for later prediction.
    """
    if not maps:
        raise PipelineError("no delay maps to fit")
    first_time = universe_max_lag + maps[0].lead - 1
    if select_range.start < first_time:
        raise PipelineError(
            f"select range starts at step {select_range.start} but the first "
            f"materializable target is step {first_time}"
        )
    models = []
    select_preds = []
    designs: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    observed = None
    for m in maps:
        X, y, times = materialize_design(frame, m, max_lag=universe_max_lag)
        designs[m.id] = (X, y, times)
        fit_mask = (times >= fit_range.start) & (times < fit_range.stop)
        sel_mask = (times >= select_range.start) & (times < select_range.stop)
        if fit_mask.sum() < 2:
            raise PipelineError("fit range yields fewer than 2 design rows")
        model = _fit_one(X[fit_mask], y[fit_mask], m.id, settings)
        models.append(model)
        select_preds.append(predict(model, X[sel_mask]))
        if observed is None:
            observed = y[sel_mask]
    return score_models(models, select_preds, observed), designs


def combine_over_range(
    pool: ScoredPool,
    designs: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]],
    out_range: range,
    combiner: str = TRIMMED_MEAN,
    trim: float = 0.2,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Combined prediction at every step of ``out_range``.

    Returns (times, combined, observed); observed is the materialized target
    over the same steps.
    """
    if combiner not in (TRIMMED_MEAN, SQRT_N_BEST):
        raise PipelineError(f"unknown combiner {combiner!r}")
    rows = []
    times_out = observed = None
    for m in pool.models:
        X, y, times = designs[m.map_id]
        mask = (times >= out_range.start) & (times < out_range.stop)
        rows.append(predict(m, X[mask]))
        if times_out is None:
            times_out = times[mask]
            observed = y[mask]
    P = np.vstack(rows)
    if combiner == TRIMMED_MEAN:
        combined = trimmed_mean_series(P, trim)
    else:
        combined = sqrt_n_best_series(pool, P)
    return times_out, combined, observed


DISJOINT = "disjoint"
RANDOM = "random"


@dataclass(frozen=True)
class ForecastOutcome:
    times: np.ndarray
    predicted: np.ndarray
    observed: np.ndarray
    pool: ScoredPool
    kept: ScoredPool
    maps: list[DelayMap]
    test_corr: float


def sample_maps(
    universe: CoordinateUniverse,
    sampling: str,
    k: int,
    partitions: int,
    random_count: int,
    target: str,
    lead: int,
    seed,
) -> list[DelayMap]:
    """Disjoint-partition or plain random sampling; ``random_count`` 0 means
    match the disjoint scheme's map count."""
    if sampling == DISJOINT:
        return sample_disjoint_partitions(universe, k, partitions, target, lead, seed)
    if sampling == RANDOM:
        count = random_count or partitions * (len(universe) // k)
        return sample_random_maps(universe, k, count, target, lead, seed)
    raise PipelineError(f"unknown sampling mode {sampling!r}")


def run_forecast(
    frame: SeriesFrame,
    target: str,
    windows: tuple[range, range, range],
    max_lag: int,
    k: int,
    settings: FitSettings,
    rule: SelectionRule,
    sampling: str = DISJOINT,
    partitions: int = 10,
    random_count: int = 0,
    lead: int = 1,
    combiner: str = TRIMMED_MEAN,
    trim: float = 0.2,
    variables: tuple[str, ...] | None = None,
    seed=0,
) -> ForecastOutcome:
    """Full sample -> fit -> down-select -> combine run on one window."""
    from .regress import pearson

    fit_range, select_range, test_range = windows
    universe = build_universe(list(variables or frame.names), max_lag)
    maps = sample_maps(
        universe, sampling, k, partitions, random_count, target, lead, seed
    )
    pool, designs = fit_and_score(
        frame, maps, universe.max_lag, fit_range, select_range, settings
    )
    kept = downselect(pool, rule)
    times, predicted, observed = combine_over_range(
        kept, designs, test_range, combiner, trim
    )
    return ForecastOutcome(
        times=times,
        predicted=predicted,
        observed=observed,
        pool=pool,
        kept=kept,
        maps=maps,
        test_corr=pearson(predicted, observed),
    )


def compare_sampling(
    frame: SeriesFrame,
    target: str,
    windows: tuple[range, range, range],
    max_lag: int,
    k: int,
    settings: FitSettings,
    rule: SelectionRule,
    partitions: int,
    lead: int,
    combiner: str,
    trim: float,
    seeds: list[int],
    variables: tuple[str, ...] | None = None,
) -> tuple[list[dict], float]:
    """Paired disjoint-vs-random runs at matched model counts and seeds.

    Returns one row per seed with both test correlations, plus the win rate
    of disjoint over random (ties count half).
    """
    rows = []
    wins = 0.0
    for seed in seeds:
        d = run_forecast(
            frame, target, windows, max_lag, k, settings, rule,
            sampling=DISJOINT, partitions=partitions, lead=lead,
            combiner=combiner, trim=trim, variables=variables, seed=seed,
        )
        r = run_forecast(
            frame, target, windows, max_lag, k, settings, rule,
            sampling=RANDOM, partitions=partitions, random_count=len(d.maps),
            lead=lead, combiner=combiner, trim=trim, variables=variables,
            seed=seed,
        )
        if len(d.maps) != len(r.maps):
            raise PipelineError("sampler model counts must match")
        rows.append(
            {
                "seed": seed,
                "n_maps": len(d.maps),
                "corr_disjoint": d.test_corr,
                "corr_random": r.test_corr,
            }
        )
        if d.test_corr > r.test_corr:
            wins += 1.0
        elif d.test_corr == r.test_corr:
            wins += 0.5
    return rows, wins / len(seeds)
