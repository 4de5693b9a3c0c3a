"""Command-line entry point.

Subcommands wire the config file, input data, and output directory through
the library pipelines.  Every command is deterministic given (config, inputs,
seed): re-running reproduces the output directory byte-for-byte, except for
the timing lines in run.log.

Exit codes: 0 success, 2 configuration errors, 3 data errors, 1 anything else.
"""

from __future__ import annotations

import csv
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import backtest as bt
from . import pipeline, skill, synth
from .config import ConfigError, RunConfig, dump_config, load_config
from .embedding import EmbeddingError, save_maps_csv
from .ensemble import EnsembleError, save_pool_csv
from .pipeline import FitSettings, PipelineError
from .timeseries import SeriesFrame, TimeseriesError, load_csv, save_csv

EXIT_CONFIG = 2
EXIT_DATA = 3


class _Run:
    """Output directory plus a run log with timings and seeds."""

    def __init__(self, out_dir: str, cfg: RunConfig):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self._log: list[str] = []
        self._t0 = time.monotonic()
        (self.dir / "config.txt").write_text(dump_config(cfg), encoding="utf-8")
        self.log(f"seed {cfg.seed}")

    def path(self, name: str) -> Path:
        return self.dir / name

    def log(self, message: str) -> None:
        self._log.append(f"[{time.monotonic() - self._t0:.3f}s] {message}")

    def finish(self) -> None:
        (self.dir / "run.log").write_text("\n".join(self._log) + "\n", encoding="utf-8")


def _load_cfg(config_path: str | None, seed: int | None) -> RunConfig:
    cfg = load_config(config_path) if config_path else RunConfig()
    if seed is not None:
        cfg.seed = seed
    return cfg


def _load_frame(cfg: RunConfig, data_path: str) -> SeriesFrame:
    frame = load_csv(data_path)
    if cfg.difference == "log":
        from .timeseries import log_difference

        frame = log_difference(frame)
    elif cfg.difference != "levels":
        raise ConfigError(f"unknown difference mode {cfg.difference!r}")
    return frame


def _forecast_windows(cfg: RunConfig, T: int) -> tuple[range, range, range]:
    start = cfg.max_lag + cfg.lead - 1
    if cfg.fit_len > 0:
        a, b, c = cfg.fit_len, cfg.select_len, cfg.test_len
        if min(b, c) < 1:
            raise ConfigError("fit_len, select_len and test_len must all be set")
    else:
        usable = T - start
        a = usable // 2
        b = usable // 4
        c = usable - a - b
    if min(a, b, c) < 1 or start + a + b + c > T:
        raise TimeseriesError(
            f"series length {T} too short for max_lag {cfg.max_lag}, lead "
            f"{cfg.lead} and windows ({a}, {b}, {c})"
        )
    return (
        range(start, start + a),
        range(start + a, start + a + b),
        range(start + a + b, start + a + b + c),
    )


def _handled(fn):
    def wrapper(*args, **kwargs):
        try:
            fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (TimeseriesError, FileNotFoundError) as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except (EmbeddingError, EnsembleError, PipelineError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    wrapper.__name__ = fn.__name__
    return wrapper


@click.group()
def main():
    """Multiview delay-map forecasting, trading backtests, and skill tests."""


_config_opt = click.option("--config", "config_path", type=click.Path(), default=None,
                           help="key=value run configuration file")
_out_opt = click.option("--out", "out_dir", type=click.Path(), required=True,
                        help="output directory for this run")
_seed_opt = click.option("--seed", type=int, default=None,
                         help="override the config seed")
_threads_opt = click.option("--threads", type=int, default=0,
                            help="worker threads (0 = auto); currently single-process")
_data_opt = click.option("--data", "data_path", type=click.Path(), required=True,
                         help="input CSV")


@main.command("synth")
@_config_opt
@_out_opt
@_seed_opt
@_threads_opt
@_handled
def cmd_synth(config_path, out_dir, seed, threads):
    """Integrate a synthetic chaotic system and emit its trajectory CSV."""
    cfg = _load_cfg(config_path, seed)
    run = _Run(out_dir, cfg)
    spec = synth.SystemSpec(
        kind=cfg.system,
        dt=cfg.dt,
        n_steps=cfg.n_steps,
        burn_in=cfg.burn_in,
        dimension=cfg.dimension,
        sigma=cfg.sigma,
        rho=cfg.rho,
        beta=cfg.beta,
        forcing=cfg.forcing,
        seed=cfg.seed,
    )
    frame = synth.integrate(spec)
    if cfg.impulse_rate > 0:
        mags = cfg.impulse_magnitude
        if cfg.impulse_relative:
            frame_noisy = frame
            for name in frame.names:
                sd = float(np.std(frame.column(name)))
                frame_noisy, _ = synth.add_impulses(
                    frame_noisy, cfg.impulse_rate, mags * sd, cfg.impulse_decay,
                    seed=cfg.seed, columns=(name,),
                )
            frame = frame_noisy
        else:
            frame, _ = synth.add_impulses(
                frame, cfg.impulse_rate, mags, cfg.impulse_decay, seed=cfg.seed
            )
    save_csv(frame, run.path("trajectory.csv"))
    meta = [
        f"kind: {spec.kind}",
        f"dt: {spec.dt}",
        f"n_steps: {spec.n_steps}",
        f"burn_in: {spec.burn_in}",
        f"dimension: {spec.dimension}",
        f"sigma: {spec.sigma}",
        f"rho: {spec.rho}",
        f"beta: {spec.beta}",
        f"forcing: {spec.forcing}",
        f"seed: {spec.seed}",
        f"impulse_rate: {cfg.impulse_rate}",
        f"impulse_magnitude: {cfg.impulse_magnitude}",
        f"impulse_decay: {cfg.impulse_decay}",
    ]
    run.path("trajectory.meta.txt").write_text("\n".join(meta) + "\n", encoding="utf-8")
    run.log("wrote trajectory.csv")
    run.finish()


@main.command("forecast")
@_config_opt
@_data_opt
@_out_opt
@_seed_opt
@_threads_opt
@_handled
def cmd_forecast(config_path, data_path, out_dir, seed, threads):
    """Lead-L ensemble forecast: predictions CSV plus the scored pool."""
    cfg = _load_cfg(config_path, seed)
    run = _Run(out_dir, cfg)
    frame = _load_frame(cfg, data_path)
    windows = _forecast_windows(cfg, frame.length)
    outcome = pipeline.run_forecast(
        frame,
        cfg.target,
        windows,
        cfg.max_lag,
        cfg.k,
        FitSettings(cfg.fit_method, cfg.cv_folds, seed=cfg.seed),
        cfg.selection_rule(),
        sampling=cfg.sampling,
        partitions=cfg.partitions,
        random_count=cfg.random_count,
        lead=cfg.lead,
        combiner=cfg.combiner,
        trim=cfg.trim,
        variables=cfg.variable_list(),
        seed=cfg.seed,
    )
    with open(run.path("predictions.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "predicted", "observed"])
        for t, p, o in zip(outcome.times, outcome.predicted, outcome.observed):
            writer.writerow([int(t), repr(float(p)), repr(float(o))])
    save_pool_csv(outcome.pool, outcome.kept, run.path("pool.csv"))
    save_maps_csv(outcome.maps, run.path("maps.csv"))
    run.log(f"test correlation {outcome.test_corr:.6f}")
    run.finish()
    click.echo(f"test correlation: {outcome.test_corr:.6f}")


@main.command("backtest")
@_config_opt
@_data_opt
@_out_opt
@_seed_opt
@_threads_opt
@_handled
def cmd_backtest(config_path, data_path, out_dir, seed, threads):
    """Multi-path walk-forward trading backtest: ledgers plus metrics CSV."""
    cfg = _load_cfg(config_path, seed)
    run = _Run(out_dir, cfg)
    frame = load_csv(data_path)
    try:
        bt_cfg = bt.BacktestConfig(
            target=cfg.target,
            variables=cfg.variable_list(),
            max_lag=cfg.max_lag,
            k=cfg.k,
            partitions=cfg.partitions,
            fit_years=cfg.fit_years,
            select_years=cfg.select_years,
            test_years=cfg.test_years,
            steps_per_year=cfg.steps_per_year,
            paths=cfg.paths,
            fit_method=cfg.fit_method,
            cv_folds=cfg.cv_folds,
            selection=cfg.selection_rule(),
            combiner=cfg.combiner,
            trim=cfg.trim,
            lead=cfg.lead,
            cost_bp=cfg.cost_bp,
            threshold=cfg.threshold,
            seed=cfg.seed,
        )
    except bt.BacktestError as exc:
        raise ConfigError(str(exc)) from None
    result = bt.run_backtest(frame, bt_cfg)
    for i, ledger in enumerate(result.paths):
        bt.save_ledger_csv(ledger, run.path(f"ledger_path{i}.csv"))
    bt.save_ledger_csv(result.averaged, run.path("ledger_mean.csv"))
    bt.save_metrics_csv(result, bt_cfg, run.path("metrics.csv"))
    run.log(f"{len(result.windows)} windows, {cfg.paths} paths")
    run.finish()
    o = result.overall
    click.echo(
        f"strategy multiple {o['strategy_multiple']:.4f}, "
        f"index multiple {o['index_multiple']:.4f}, gain {o['gain']:.4f}"
    )


@main.command("skilltest")
@_config_opt
@_data_opt
@_out_opt
@_seed_opt
@_threads_opt
@_handled
def cmd_skilltest(config_path, data_path, out_dir, seed, threads):
    """Conditional permutation test on a binary skill matrix, or FDR
    screening when the input is a p-value list."""
    cfg = _load_cfg(config_path, seed)
    run = _Run(out_dir, cfg)
    with open(data_path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if "p_value" in header:
        p_values, labels = [], []
        with open(data_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                labels.append(row.get("label", str(len(labels))))
                p_values.append(float(row["p_value"]))
        selected = set(skill.fdr_select(p_values, cfg.fdr_q))
        with open(run.path("fdr.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "p_value", "selected", "q"])
            for i, (label, p) in enumerate(zip(labels, p_values)):
                writer.writerow([label, repr(p), int(i in selected), cfg.fdr_q])
        run.log(f"FDR selected {len(selected)} of {len(p_values)}")
        run.finish()
        click.echo(f"selected {len(selected)} of {len(p_values)} at q={cfg.fdr_q}")
        return
    matrix = skill.load_matrix_csv(data_path)
    result = skill.conditional_test(
        matrix,
        top_k=cfg.top_k,
        n_perm=cfg.n_perm,
        seed=cfg.seed,
        conditional_reference=cfg.conditional_reference,
    )
    skill.save_test_report_csv({Path(data_path).stem: result}, run.path("report.csv"))
    run.log(f"statistic {result.statistic:.6f}, p {result.p_value:.4f}")
    run.finish()
    click.echo(f"statistic {result.statistic:.6f}, p-value {result.p_value:.4f}")


@main.command("compare-sampling")
@_config_opt
@_data_opt
@_out_opt
@_seed_opt
@_threads_opt
@_handled
def cmd_compare_sampling(config_path, data_path, out_dir, seed, threads):
    """Paired disjoint-vs-random sampling experiment at matched model counts."""
    cfg = _load_cfg(config_path, seed)
    run = _Run(out_dir, cfg)
    frame = _load_frame(cfg, data_path)
    windows = _forecast_windows(cfg, frame.length)
    seeds = list(range(cfg.seed, cfg.seed + cfg.compare_seeds))
    rows, win_rate = pipeline.compare_sampling(
        frame,
        cfg.target,
        windows,
        cfg.max_lag,
        cfg.k,
        FitSettings(cfg.fit_method, cfg.cv_folds, seed=cfg.seed),
        cfg.selection_rule(),
        partitions=cfg.partitions,
        lead=cfg.lead,
        combiner=cfg.combiner,
        trim=cfg.trim,
        seeds=seeds,
        variables=cfg.variable_list(),
    )
    with open(run.path("pairs.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "n_maps", "corr_disjoint", "corr_random"])
        for row in rows:
            writer.writerow(
                [row["seed"], row["n_maps"], repr(row["corr_disjoint"]),
                 repr(row["corr_random"])]
            )
        writer.writerow(["win_rate", "", repr(win_rate), ""])
    run.log(f"win rate {win_rate:.3f} over {len(seeds)} seeds")
    run.finish()
    click.echo(f"disjoint win rate: {win_rate:.3f}")


if __name__ == "__main__":
    main()
