"""Multivariate time series container, CSV I/O, differencing, walk-forward windows.

All values are immutable after construction so frames can be shared freely
across parallel workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class TimeseriesError(ValueError):
    """Raised for malformed series data or infeasible window plans."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SeriesFrame:
    """Columnar multivariate series on an integer step index 0..T-1.

    ``values`` is a T x n_columns float array; ``dates`` optionally carries
    ISO-8601 calendar dates aligned to the step index.
    """

    names: tuple[str, ...]
    values: np.ndarray
    dates: tuple[str, ...] | None = None

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if vals.ndim != 2:
            raise TimeseriesError("values must be a 2-d array (T x columns)")
        object.__setattr__(self, "values", _freeze(vals))
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != vals.shape[1]:
            raise TimeseriesError(
                f"{len(self.names)} names for {vals.shape[1]} columns"
            )
        if len(set(self.names)) != len(self.names):
            raise TimeseriesError("duplicate column names")
        if vals.shape[0] < 1:
            raise TimeseriesError("series must have at least one row")
        if self.dates is not None:
            dates = tuple(self.dates)
            object.__setattr__(self, "dates", dates)
            if len(dates) != vals.shape[0]:
                raise TimeseriesError("dates length does not match series length")
            if any(b <= a for a, b in zip(dates, dates[1:])):
                raise TimeseriesError("dates must be strictly increasing")

    @property
    def length(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise TimeseriesError(f"unknown column {name!r}") from None
        return self.values[:, j]

    def with_values(self, values: np.ndarray) -> "SeriesFrame":
        """Same shape and labels, new values (used by noise injection)."""
        return SeriesFrame(self.names, values, self.dates)


@dataclass(frozen=True)
class WindowPlan:
    """Walk-forward split lengths, in steps."""

    fit_len: int
    select_len: int
    test_len: int
    stride: int = field(default=0)

    def __post_init__(self):
        if self.stride == 0:
            object.__setattr__(self, "stride", self.test_len)
        if min(self.fit_len, self.select_len, self.test_len) < 1:
            raise TimeseriesError("window lengths must all be >= 1")
        if self.stride < 1:
            raise TimeseriesError("stride must be >= 1")

    @property
    def total(self) -> int:
        return self.fit_len + self.select_len + self.test_len


def load_csv(path, date_column: str | None = None) -> SeriesFrame:
    """Load a UTF-8 comma-separated file with a header row.

    If ``date_column`` is given (or the first header is literally "date"),
    that column is parsed as ISO-8601 calendar dates; every other cell must
    parse as a float.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TimeseriesError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if date_column is None and header and header[0].lower() == "date":
            date_column = header[0]
        if date_column is not None and date_column not in header:
            raise TimeseriesError(f"{path}: no column {date_column!r}")
        date_idx = header.index(date_column) if date_column is not None else -1
        names = [h for i, h in enumerate(header) if i != date_idx]
        if len(set(names)) != len(names):
            raise TimeseriesError(f"{path}: duplicate header names {names}")

        rows: list[list[float]] = []
        dates: list[str] = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise TimeseriesError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(cells)}"
                )
            row = []
            for i, cell in enumerate(cells):
                if i == date_idx:
                    dates.append(cell.strip())
                    continue
                try:
                    row.append(float(cell))
                except ValueError:
                    raise TimeseriesError(
                        f"{path}:{lineno}: non-numeric cell {cell!r} "
                        f"in column {header[i]!r}"
                    ) from None
            rows.append(row)
    if not rows:
        raise TimeseriesError(f"{path}: no data rows")
    values = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise TimeseriesError(f"{path}: non-finite values present")
    return SeriesFrame(tuple(names), values, tuple(dates) if date_idx >= 0 else None)


def save_csv(frame: SeriesFrame, path) -> None:
    """Emit a frame in the same format :func:`load_csv` ingests (round-trips
    finite floats bit-exactly via repr)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = (["date"] if frame.dates is not None else []) + list(frame.names)
        writer.writerow(header)
        for t in range(frame.length):
            row = [frame.dates[t]] if frame.dates is not None else []
            row += [repr(float(v)) for v in frame.values[t]]
            writer.writerow(row)


def first_difference(frame: SeriesFrame, column: str | None = None) -> SeriesFrame:
    """Difference one column (or all when ``column`` is None).

    Output row t holds v[t+1] - v[t] of the input, stamped at the *later*
    time: output step t corresponds to input step t+1, so a differenced
    value never uses data past its own stamp.
    """
    if frame.length < 2:
        raise TimeseriesError("need at least 2 rows to difference")
    if column is None:
        diffed = np.diff(frame.values, axis=0)
        names = frame.names
    else:
        v = frame.column(column)
        diffed = np.diff(v)[:, None]
        names = (column,)
    dates = frame.dates[1:] if frame.dates is not None else None
    return SeriesFrame(names, diffed, dates)


def log_difference(frame: SeriesFrame, column: str | None = None) -> SeriesFrame:
    """Difference of natural logs; requires strictly positive levels."""
    cols = frame.names if column is None else (column,)
    vals = np.column_stack([frame.column(c) for c in cols])
    if np.any(vals <= 0):
        raise TimeseriesError("log differencing requires positive levels")
    logged = SeriesFrame(tuple(cols), np.log(vals), frame.dates)
    return first_difference(logged)


def walk_forward_windows(T: int, plan: WindowPlan) -> list[tuple[range, range, range]]:
    """Enumerate (fit, select, test) step ranges advancing by ``plan.stride``.

    The last window that would run past T is dropped.  With the default
    stride (= test_len) the test ranges tile the post-training era.
    """
    if plan.total > T:
        raise TimeseriesError(
            f"window plan needs {plan.total} steps but series has {T}"
        )
    windows = []
    start = 0
    while start + plan.total <= T:
        a = start
        b = a + plan.fit_len
        c = b + plan.select_len
        d = c + plan.test_len
        windows.append((range(a, b), range(b, c), range(c, d)))
        start += plan.stride
    return windows
