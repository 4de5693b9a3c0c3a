"""Desk-scale chaotic test systems (Lorenz-63 / Lorenz-96) and an open-system
emulator that overlays exponentially decaying Gaussian impulses on the
measured series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .timeseries import SeriesFrame

LORENZ63 = "LORENZ63"
LORENZ96 = "LORENZ96"


class SynthError(ValueError):
    """Raised for invalid system specs or diverging trajectories."""


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    dt: float = 0.01
    n_steps: int = 5000
    burn_in: int = 1000
    dimension: int = 8  # LORENZ96 only
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    forcing: float = 8.0
    seed: int = 0
    initial: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if self.kind not in (LORENZ63, LORENZ96):
            raise SynthError(f"unknown system kind {self.kind!r}")
        if self.dt <= 0:
            raise SynthError("dt must be positive")
        if self.burn_in < 0:
            raise SynthError("burn_in must be >= 0")
        if self.kind == LORENZ96 and self.dimension < 4:
            raise SynthError("LORENZ96 needs dimension >= 4")


def _initial_state(spec: SystemSpec) -> np.ndarray:
    dim = 3 if spec.kind == LORENZ63 else spec.dimension
    if spec.initial is not None:
        init = np.asarray(spec.initial, dtype=np.float64)
        if init.shape != (dim,):
            raise SynthError(f"initial state must have {dim} entries")
        return init
    rng = np.random.default_rng(spec.seed)
    if spec.kind == LORENZ63:
        return np.array([1.0, 1.0, 1.0]) + 0.01 * rng.standard_normal(3)
    init = spec.forcing * np.ones(dim)
    init += 0.01 * rng.standard_normal(dim)
    return init


def integrate(spec: SystemSpec) -> SeriesFrame:
    """Fixed-step RK4 trajectory after burn-in, one column per coordinate."""
    s0 = _initial_state(spec)
    total = spec.burn_in + spec.n_steps
    if spec.kind == LORENZ63:
        traj = backend.lorenz63_trajectory(
            s0, spec.sigma, spec.rho, spec.beta, spec.dt, total
        )
        names = ("x", "y", "z")
    else:
        traj = backend.lorenz96_trajectory(s0, spec.forcing, spec.dt, total)
        names = tuple(f"x{i}" for i in range(spec.dimension))
    traj = traj[spec.burn_in + 1 :]
    bad = np.flatnonzero(~np.all(np.isfinite(traj), axis=1))
    if bad.size:
        raise SynthError(f"trajectory diverged at step {spec.burn_in + int(bad[0])}")
    return SeriesFrame(names, traj)


def add_impulses(
    frame: SeriesFrame,
    rate: float,
    magnitude: float,
    decay: float,
    seed: int = 0,
    columns: tuple[str, ...] | None = None,
) -> tuple[SeriesFrame, np.ndarray]:
    """Overlay Poisson-arriving, exponentially decaying Gaussian impulses.

    Each arrival at t0 in a column adds magnitude * g * decay^(t - t0) for
    t >= t0, with g standard normal.  Returns the noisy frame together with
    the additive impulse track, so the clean frame is exactly recoverable by
    subtraction.
    """
    if not 0.0 <= rate <= 1.0:
        raise SynthError("rate must be in [0, 1]")
    if not 0.0 < decay < 1.0:
        raise SynthError("decay must be in (0, 1)")
    rng = np.random.default_rng(seed)
    cols = frame.names if columns is None else tuple(columns)
    col_idx = [frame.names.index(c) for c in cols]
    T = frame.length
    track = np.zeros((T, len(frame.names)))
    # arrivals drawn per column, then convolved with the decay kernel via a
    # running recursion: track[t] = decay * track[t-1] + hit[t]
    for j in col_idx:
        hits = (rng.random(T) < rate) * (magnitude * rng.standard_normal(T))
        level = 0.0
        for t in range(T):
            level = decay * level + hits[t]
            track[t, j] = level
    noisy = frame.values + track
    return frame.with_values(noisy), track
