"""Threshold-crossing trading decisions and the multi-path walk-forward
backtest with cost accounting, gain, decadal Sharpe, and the two-year sign
test.

The trading rule is the simplest possible: money is in the market unless
tomorrow's change is predicted below the threshold, in which case it sits in
cash earning nothing.  Each in/out transition pays the configured basis-point
cost multiplicatively.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .embedding import build_universe, sample_disjoint_partitions
from .ensemble import SelectionRule, TOP_FRACTION, downselect
from .pipeline import (
    FitSettings,
    TRIMMED_MEAN,
    combine_over_range,
    fit_and_score,
)
from .timeseries import (
    SeriesFrame,
    TimeseriesError,
    WindowPlan,
    first_difference,
    walk_forward_windows,
)

IN = "IN"
OUT = "OUT"


class BacktestError(ValueError):
    pass


@dataclass(frozen=True)
class BacktestConfig:
    """Walk-forward trading configuration.

    The training era is always 8 years, split (3, 5) or (6, 2) between model
    fitting and down-selection, followed by a 2-year test window; the "year"
    unit is ``steps_per_year`` steps.
    """

    target: str
    variables: tuple[str, ...] | None = None
    max_lag: int = 40
    k: int = 20
    partitions: int = 10
    fit_years: int = 6
    select_years: int = 2
    test_years: int = 2
    steps_per_year: int = 250
    paths: int = 5
    fit_method: str = "ols"
    cv_folds: int = 10
    selection: SelectionRule = field(default_factory=lambda: SelectionRule(TOP_FRACTION, q=0.4))
    combiner: str = TRIMMED_MEAN
    trim: float = 0.2
    lead: int = 1
    cost_bp: float = 0.0
    threshold: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.fit_years + self.select_years != 8:
            raise BacktestError("fit_years + select_years must equal 8")
        if self.paths < 1:
            raise BacktestError("paths must be >= 1")
        if self.cost_bp < 0:
            raise BacktestError("cost_bp must be >= 0")

    def window_plan(self) -> WindowPlan:
        spy = self.steps_per_year
        return WindowPlan(
            fit_len=self.fit_years * spy,
            select_len=self.select_years * spy,
            test_len=self.test_years * spy,
        )


@dataclass(frozen=True)
class TradeLedger:
    """Per-step record of one backtest path (or the path average)."""

    steps: np.ndarray
    predictions: np.ndarray
    positions: np.ndarray  # bool, True = IN
    index_returns: np.ndarray
    strategy_returns: np.ndarray  # position-gated, pre-cost
    trades: np.ndarray  # bool, position changed from previous step
    capital: np.ndarray
    dates: tuple[str, ...] | None = None

    @property
    def final_multiple(self) -> float:
        return float(self.capital[-1])

    @property
    def index_multiple(self) -> float:
        return float(np.prod(1.0 + self.index_returns))

    def net_returns(self) -> np.ndarray:
        """Per-step capital ratio minus 1 (cost included)."""
        prev = np.concatenate(([1.0], self.capital[:-1]))
        return self.capital / prev - 1.0


def threshold_decision(predicted_change: float, threshold: float = 0.0) -> str:
    """OUT iff the predicted change is strictly below the threshold; ties
    stay IN.  Non-finite predictions fail passive to buy-and-hold."""
    if not math.isfinite(predicted_change):
        warnings.warn("non-finite prediction; staying in the market", stacklevel=2)
        return IN
    return OUT if predicted_change < threshold else IN


def build_ledger(
    steps: np.ndarray,
    predictions: np.ndarray,
    positions: np.ndarray,
    index_returns: np.ndarray,
    cost_bp: float,
    initial_position: bool = True,
    initial_capital: float = 1.0,
    dates: tuple[str, ...] | None = None,
) -> TradeLedger:
    """Compound capital: each step multiplies by (1 - cost_bp * 1e-4) when
    the position flips, then by (1 + return) when IN."""
    positions = np.asarray(positions, dtype=bool)
    prev = np.concatenate(([initial_position], positions[:-1]))
    trades = positions != prev
    strat = np.where(positions, index_returns, 0.0)
    cost = 1.0 - cost_bp * 1e-4
    # sequential recurrence keeps the ledger bit-identical to hand arithmetic
    capital = np.empty(positions.size)
    c = initial_capital
    for i in range(positions.size):
        if trades[i]:
            c *= cost
        c *= 1.0 + strat[i]
        capital[i] = c
    return TradeLedger(
        steps=np.asarray(steps),
        predictions=np.asarray(predictions, dtype=np.float64),
        positions=positions,
        index_returns=np.asarray(index_returns, dtype=np.float64),
        strategy_returns=strat,
        trades=trades,
        capital=capital,
        dates=dates,
    )


def _diff_and_returns(frame: SeriesFrame, target: str) -> tuple[SeriesFrame, np.ndarray]:
    """First-difference all columns; step t of the result is the change into
    level step t+1.  Also returns the target's simple returns on the same
    step grid."""
    diffed = first_difference(frame)
    levels = frame.column(target)
    if np.any(levels == 0.0):
        raise BacktestError("target index has zero levels; returns undefined")
    returns = np.diff(levels) / levels[:-1]
    return diffed, returns


def run_path(
    frame: SeriesFrame,
    window: tuple[range, range, range],
    config: BacktestConfig,
    path_seed: int,
    initial_position: bool = True,
    initial_capital: float = 1.0,
) -> TradeLedger:
    """One trading path over one walk-forward window.

    Samples a fresh disjoint-partition map set under ``path_seed``, fits on
    the fit range (targets are first differences), down-selects on the
    select range, and trades the test range on the combined prediction.
    Ranges are in differenced-step units.
    """
    fit_range, select_range, test_range = window
    diffed, returns = _diff_and_returns(frame, config.target)
    variables = config.variables or diffed.names
    universe = build_universe(list(variables), config.max_lag)
    maps = sample_disjoint_partitions(
        universe,
        config.k,
        config.partitions,
        target=config.target,
        lead=config.lead,
        seed=(path_seed, fit_range.start),
    )
    settings = FitSettings(config.fit_method, config.cv_folds, seed=path_seed)
    pool, designs = fit_and_score(
        diffed, maps, universe.max_lag, fit_range, select_range, settings
    )
    kept = downselect(pool, config.selection)
    times, predicted, _ = combine_over_range(
        kept, designs, test_range, config.combiner, config.trim
    )
    positions = np.array(
        [threshold_decision(p, config.threshold) == IN for p in predicted]
    )
    dates = None
    if frame.dates is not None:
        # diff step t is stamped at level step t+1
        dates = tuple(frame.dates[t + 1] for t in times)
    return build_ledger(
        times,
        predicted,
        positions,
        returns[times],
        config.cost_bp,
        initial_position=initial_position,
        initial_capital=initial_capital,
        dates=dates,
    )


def _concat_ledgers(parts: list[TradeLedger]) -> TradeLedger:
    dates = None
    if parts[0].dates is not None:
        dates = tuple(d for p in parts for d in p.dates)
    return TradeLedger(
        steps=np.concatenate([p.steps for p in parts]),
        predictions=np.concatenate([p.predictions for p in parts]),
        positions=np.concatenate([p.positions for p in parts]),
        index_returns=np.concatenate([p.index_returns for p in parts]),
        strategy_returns=np.concatenate([p.strategy_returns for p in parts]),
        trades=np.concatenate([p.trades for p in parts]),
        capital=np.concatenate([p.capital for p in parts]),
        dates=dates,
    )


@dataclass(frozen=True)
class BacktestResult:
    averaged: TradeLedger
    paths: tuple[TradeLedger, ...]
    windows: tuple[tuple[range, range, range], ...]
    window_metrics: tuple[dict, ...]
    overall: dict


def run_backtest(frame: SeriesFrame, config: BacktestConfig) -> BacktestResult:
    """Walk the windows forward, run ``config.paths`` trading paths with
    seeds seed+0..paths-1, and average the paths' daily net returns."""
    diffed, returns = _diff_and_returns(frame, config.target)
    plan = config.window_plan()
    windows = walk_forward_windows(diffed.length, plan)
    if not windows:
        raise TimeseriesError("series too short for a single walk-forward window")

    path_ledgers = []
    for p in range(config.paths):
        parts = []
        position, capital = True, 1.0
        for window in windows:
            part = run_path(
                frame,
                window,
                config,
                path_seed=config.seed + p,
                initial_position=position,
                initial_capital=capital,
            )
            position = bool(part.positions[-1])
            capital = part.final_multiple
            parts.append(part)
        path_ledgers.append(_concat_ledgers(parts))

    # average daily net (cost-inclusive) returns across paths, then compound
    net = np.mean([led.net_returns() for led in path_ledgers], axis=0)
    capital = np.cumprod(1.0 + net)
    base = path_ledgers[0]
    averaged = TradeLedger(
        steps=base.steps,
        predictions=np.mean([led.predictions for led in path_ledgers], axis=0),
        positions=np.mean([led.positions for led in path_ledgers], axis=0) >= 0.5,
        index_returns=base.index_returns,
        strategy_returns=net,
        trades=np.any([led.trades for led in path_ledgers], axis=0),
        capital=capital,
        dates=base.dates,
    )

    window_metrics = []
    strat_mults, index_mults = [], []
    offset = 0
    for window in windows:
        n = len(window[2])
        sl = slice(offset, offset + n)
        s_mult = float(np.prod(1.0 + net[sl]))
        i_mult = float(np.prod(1.0 + base.index_returns[sl]))
        strat_mults.append(s_mult)
        index_mults.append(i_mult)
        window_metrics.append(
            {
                "window_start": window[2].start,
                "strategy_multiple": s_mult,
                "index_multiple": i_mult,
                "gain": gain(s_mult, i_mult),
            }
        )
        offset += n

    overall = {
        "strategy_multiple": float(capital[-1]),
        "index_multiple": float(np.prod(1.0 + base.index_returns)),
    }
    overall["gain"] = gain(overall["strategy_multiple"], overall["index_multiple"])
    steps_per_decade = 10 * config.steps_per_year
    if net.size >= 2 * steps_per_decade:
        overall["sharpe_decadal"] = sharpe_decadal(
            net, base.index_returns, steps_per_decade
        )
    else:
        overall["sharpe_decadal"] = float("nan")
    try:
        overall["sign_p"] = sign_test(strat_mults, index_mults)
    except BacktestError:
        overall["sign_p"] = float("nan")
    return BacktestResult(
        averaged=averaged,
        paths=tuple(path_ledgers),
        windows=tuple(windows),
        window_metrics=tuple(window_metrics),
        overall=overall,
    )


def gain(strategy_multiple: float, index_multiple: float) -> float:
    """How much trading changed accumulated capital relative to the index."""
    if index_multiple <= 0:
        raise BacktestError("index multiple must be positive")
    return strategy_multiple / index_multiple


def sharpe_decadal(
    strategy_returns: np.ndarray,
    baseline_returns: np.ndarray,
    steps_per_decade: int,
) -> float:
    """Mean over sample standard deviation of per-decade log-multiple excess
    (strategy minus baseline); trailing partial decade dropped."""
    rs = np.asarray(strategy_returns, dtype=np.float64)
    rb = np.asarray(baseline_returns, dtype=np.float64)
    if rs.shape != rb.shape:
        raise BacktestError("return series must align")
    n_dec = rs.size // steps_per_decade
    if n_dec < 2:
        raise BacktestError("need at least 2 complete decades")
    excess = []
    for d in range(n_dec):
        sl = slice(d * steps_per_decade, (d + 1) * steps_per_decade)
        excess.append(
            float(np.sum(np.log1p(rs[sl])) - np.sum(np.log1p(rb[sl])))
        )
    excess = np.array(excess)
    sd = float(np.std(excess, ddof=1))
    mean = float(np.mean(excess))
    if sd == 0.0:
        return math.copysign(math.inf, mean) if mean != 0.0 else 0.0
    return mean / sd


def sign_test(strategy_window_multiples, baseline_window_multiples) -> float:
    """One-sided exact binomial p-value for the count of windows where the
    strategy beat the baseline; exactly-tied windows are dropped."""
    s = np.asarray(strategy_window_multiples, dtype=np.float64)
    b = np.asarray(baseline_window_multiples, dtype=np.float64)
    if s.shape != b.shape or s.size < 1:
        raise BacktestError("need aligned, non-empty window multiples")
    wins = int(np.count_nonzero(s > b))
    n = int(np.count_nonzero(s != b))
    if n == 0:
        raise BacktestError("all windows tied; sign test undefined")
    return sum(math.comb(n, j) for j in range(wins, n + 1)) / 2.0**n


def save_ledger_csv(ledger: TradeLedger, path) -> None:
    """(step, date, prediction, position, index_return, strategy_return,
    trade, capital) per step."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["step", "date", "prediction", "position", "index_return",
             "strategy_return", "trade", "capital"]
        )
        for i in range(ledger.steps.size):
            writer.writerow(
                [
                    int(ledger.steps[i]),
                    ledger.dates[i] if ledger.dates is not None else "",
                    repr(float(ledger.predictions[i])),
                    IN if ledger.positions[i] else OUT,
                    repr(float(ledger.index_returns[i])),
                    repr(float(ledger.strategy_returns[i])),
                    int(ledger.trades[i]),
                    repr(float(ledger.capital[i])),
                ]
            )


def save_metrics_csv(result: BacktestResult, config: BacktestConfig, path) -> None:
    """Per-window rows plus an overall row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["index", "fit_years", "q", "cost_bp", "window_start",
             "strategy_multiple", "index_multiple", "gain",
             "sharpe_decadal", "sign_p"]
        )
        q = config.selection.q if config.selection.mode == TOP_FRACTION else ""
        for wm in result.window_metrics:
            writer.writerow(
                [config.target, config.fit_years, q, config.cost_bp,
                 wm["window_start"], repr(wm["strategy_multiple"]),
                 repr(wm["index_multiple"]), repr(wm["gain"]), "", ""]
            )
        o = result.overall
        writer.writerow(
            [config.target, config.fit_years, q, config.cost_bp, "overall",
             repr(o["strategy_multiple"]), repr(o["index_multiple"]),
             repr(o["gain"]), repr(o["sharpe_decadal"]), repr(o["sign_p"])]
        )
