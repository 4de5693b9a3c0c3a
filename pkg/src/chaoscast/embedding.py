"""Delay-coordinate universe, random / disjoint-partition map sampling, and
regression design materialization.

A delay map is an ordered set of (variable, lag) coordinates predicting a
target column ``lead`` steps ahead of the most recent regressor.  Sampling
is deterministic under a seed; within one disjoint partition every map's
coordinate set is pairwise disjoint.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .timeseries import SeriesFrame


class EmbeddingError(ValueError):
    """Raised for invalid universes, sample sizes, or designs."""


@dataclass(frozen=True, order=True)
class Coordinate:
    variable: str
    lag: int

    def __post_init__(self):
        if self.lag < 1:
            raise EmbeddingError("lag must be >= 1 (lag 0 would be the target itself)")


@dataclass(frozen=True)
class DelayMap:
    """k distinct lagged coordinates plus a lead-L target."""

    coords: tuple[Coordinate, ...]
    target: str
    lead: int
    id: int
    partition: int = -1

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if len(set(self.coords)) != len(self.coords):
            raise EmbeddingError("delay map coordinates must be pairwise distinct")
        if self.lead < 1:
            raise EmbeddingError("lead must be >= 1")

    @property
    def k(self) -> int:
        return len(self.coords)

    @property
    def max_lag(self) -> int:
        return max(c.lag for c in self.coords)

    def coord_set(self) -> frozenset[Coordinate]:
        return frozenset(self.coords)


@dataclass(frozen=True)
class CoordinateUniverse:
    coords: tuple[Coordinate, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if len(set(self.coords)) != len(self.coords):
            raise EmbeddingError("universe contains duplicate coordinates")

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def max_lag(self) -> int:
        return max(c.lag for c in self.coords)


def build_universe(variables: list[str], max_lag: int) -> CoordinateUniverse:
    """All (variable, lag) pairs, variable-major then lag ascending."""
    if not variables:
        raise EmbeddingError("need at least one variable")
    if len(set(variables)) != len(variables):
        raise EmbeddingError("duplicate variable names")
    if max_lag < 1:
        raise EmbeddingError("max_lag must be >= 1")
    coords = tuple(
        Coordinate(v, lag) for v in variables for lag in range(1, max_lag + 1)
    )
    return CoordinateUniverse(coords)


def sample_random_maps(
    universe: CoordinateUniverse,
    k: int,
    count: int,
    target: str,
    lead: int,
    seed: int,
    id_base: int = 0,
) -> list[DelayMap]:
    """``count`` maps of k coordinates each, drawn uniformly without
    replacement within a map; maps may overlap each other."""
    if k > len(universe):
        raise EmbeddingError(f"k={k} exceeds universe size {len(universe)}")
    rng = np.random.default_rng(seed)
    maps = []
    for i in range(count):
        idx = rng.choice(len(universe), size=k, replace=False)
        coords = tuple(universe.coords[j] for j in idx)
        maps.append(DelayMap(coords, target, lead, id=id_base + i))
    return maps


def sample_disjoint_partitions(
    universe: CoordinateUniverse,
    k: int,
    partitions: int,
    target: str,
    lead: int,
    seed: int,
    id_base: int = 0,
) -> list[DelayMap]:
    """For each partition: shuffle the universe and cut it into
    floor(|universe|/k) disjoint blocks of size k.

    Remainder coordinates are dropped for that partition so every map keeps
    dimension k.  Total maps = partitions * floor(|universe|/k).
    """
    if k > len(universe):
        raise EmbeddingError(f"k={k} exceeds universe size {len(universe)}")
    rng = np.random.default_rng(seed)
    n_blocks = len(universe) // k
    maps = []
    next_id = id_base
    for p in range(partitions):
        order = rng.permutation(len(universe))
        for b in range(n_blocks):
            idx = order[b * k : (b + 1) * k]
            coords = tuple(universe.coords[j] for j in idx)
            maps.append(DelayMap(coords, target, lead, id=next_id, partition=p))
            next_id += 1
    return maps


def maps_per_partition(universe_size: int, k: int) -> int:
    return universe_size // k


def materialize_design(
    frame: SeriesFrame, dmap: DelayMap, max_lag: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Build the regression design (X, y, times) for one delay map.

    Row t of X holds frame[var][base - lag] for each coordinate, and
    y[t] = frame[target][base + lead - 1], so every regressor precedes the
    target by at least ``lead`` steps.  ``times`` stamps the target's step.

    ``max_lag`` may be given (>= the map's own max lag) to align row grids
    across maps sampled from a common universe.
    """
    lag0 = dmap.max_lag if max_lag is None else max_lag
    if lag0 < dmap.max_lag:
        raise EmbeddingError("max_lag override smaller than the map's own max lag")
    T = frame.length
    n_rows = T - lag0 - dmap.lead + 1
    if n_rows < 1:
        raise EmbeddingError(
            f"series length {T} too short for max lag {lag0} and lead {dmap.lead}"
        )
    base = np.arange(lag0, lag0 + n_rows)
    X = np.column_stack([frame.column(c.variable)[base - c.lag] for c in dmap.coords])
    times = base + dmap.lead - 1
    y = frame.column(dmap.target)[times]
    return X, y, times


def save_maps_csv(maps: list[DelayMap], path) -> None:
    """One row per coordinate: (map_id, partition_id, variable, lag, target, lead)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["map_id", "partition_id", "variable", "lag", "target", "lead"])
        for m in maps:
            for c in m.coords:
                writer.writerow([m.id, m.partition, c.variable, c.lag, m.target, m.lead])


def load_maps_csv(path) -> list[DelayMap]:
    groups: dict[int, dict] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            g = groups.setdefault(
                int(row["map_id"]),
                {
                    "partition": int(row["partition_id"]),
                    "target": row["target"],
                    "lead": int(row["lead"]),
                    "coords": [],
                },
            )
            g["coords"].append(Coordinate(row["variable"], int(row["lag"])))
    return [
        DelayMap(tuple(g["coords"]), g["target"], g["lead"], id=mid, partition=g["partition"])
        for mid, g in sorted(groups.items())
    ]
