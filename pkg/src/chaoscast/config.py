"""Plain-text key=value run configuration.

Unknown keys are rejected, and every run's effective configuration can be
echoed back out so an output directory re-runs to identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .ensemble import MIN_CORR, TOP_FRACTION, SelectionRule


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # synthetic system
    system: str = "LORENZ63"
    dimension: int = 8
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    forcing: float = 8.0
    dt: float = 0.01
    n_steps: int = 5000
    burn_in: int = 1000
    impulse_rate: float = 0.0
    impulse_magnitude: float = 0.0
    impulse_relative: bool = False  # magnitude in units of each column's sd
    impulse_decay: float = 0.9
    # coordinate universe and sampling
    target: str = "x"
    variables: str = ""  # comma-separated; empty = all columns
    max_lag: int = 40
    k: int = 20
    sampling: str = "disjoint"
    partitions: int = 10
    random_count: int = 0  # 0 = match the disjoint scheme's map count
    lead: int = 1
    # fitting
    fit_method: str = "ols"
    cv_folds: int = 10
    # down-selection and combination
    selection_mode: str = "top_fraction"
    top_fraction: float = 0.4
    min_corr: float = -1.0
    combiner: str = "trimmed_mean"
    trim: float = 0.2
    # windows (forecast / compare use lengths; 0 = derive 2:1:1 split)
    fit_len: int = 0
    select_len: int = 0
    test_len: int = 0
    # backtest
    fit_years: int = 6
    select_years: int = 2
    test_years: int = 2
    steps_per_year: int = 250
    paths: int = 5
    cost_bp: float = 0.0
    threshold: float = 0.0
    # skill test
    top_k: int = 4
    n_perm: int = 1000
    fdr_q: float = 0.05
    conditional_reference: bool = False
    # misc
    difference: str = "levels"  # or "log"
    compare_seeds: int = 20
    seed: int = 0

    def selection_rule(self) -> SelectionRule:
        if self.selection_mode == "top_fraction":
            return SelectionRule(TOP_FRACTION, q=self.top_fraction)
        if self.selection_mode == "min_corr":
            return SelectionRule(MIN_CORR, r_t=self.min_corr)
        raise ConfigError(f"unknown selection_mode {self.selection_mode!r}")

    def variable_list(self) -> tuple[str, ...] | None:
        if not self.variables.strip():
            return None
        return tuple(v.strip() for v in self.variables.split(","))


_FIELDS = {f.name: f.type for f in fields(RunConfig)}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, raw: str):
    default = getattr(RunConfig(), key)
    if isinstance(default, bool):
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw


def parse_config_text(text: str) -> RunConfig:
    cfg = RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(cfg, key, _coerce(key, raw))
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
