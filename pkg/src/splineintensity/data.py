"""Binned counts and event paths for a T-periodic Poisson process."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln


class DataFormatError(ValueError):
    """A malformed row in an input file."""


@dataclass(frozen=True)
class DataLayout:
    """``periods`` days of length ``period``, each cut into ``bins_per_period`` bins."""

    period: float
    bins_per_period: int
    periods: int

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if self.bins_per_period < 1:
            raise ValueError(f"bins_per_period must be >= 1, got {self.bins_per_period}")
        if self.periods < 1:
            raise ValueError(f"periods must be >= 1, got {self.periods}")

    @property
    def bin_width(self) -> float:
        return self.period / self.bins_per_period

    @property
    def edges(self) -> np.ndarray:
        """Bin edges within one period; the last edge is exactly ``period``."""
        e = np.arange(self.bins_per_period + 1) * self.bin_width
        e[-1] = self.period
        return e


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BinnedCounts:
    layout: DataLayout
    counts: np.ndarray
    col_sums: np.ndarray = field(init=False)
    log_factorial_sum: float = field(init=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        shape = (self.layout.periods, self.layout.bins_per_period)
        if counts.shape != shape:
            raise ValueError(f"counts have shape {counts.shape}, layout requires {shape}")
        if counts.size and (counts.min() < 0 or not np.array_equal(counts, np.round(counts))):
            raise ValueError("counts must be nonnegative integers")
        counts = _frozen(counts.astype(np.int64))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "col_sums", _frozen(counts.sum(axis=0)))
        object.__setattr__(self, "log_factorial_sum", float(gammaln(counts + 1.0).sum()))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class EventPath:
    layout: DataLayout
    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        if times.size:
            if np.any(np.diff(times) < 0):
                raise ValueError("event times must be nondecreasing")
            horizon = self.layout.periods * self.layout.period
            if times[0] < 0 or times[-1] > horizon:
                raise ValueError(f"event times must lie in [0, {horizon}]")
        object.__setattr__(self, "times", _frozen(times))

    def phases(self) -> np.ndarray:
        """Event times folded into [0, T]; period ends map to T."""
        T = self.layout.period
        ph = np.mod(self.times, T)
        ph[(ph == 0.0) & (self.times > 0)] = T
        return ph


def _data_rows(path: Path):
    with open(path, newline="") as fh:
        lines = ((no, line) for no, line in enumerate(fh, start=1) if line.strip() and not line.startswith("#"))
        header = None
        for no, line in lines:
            row = next(csv.reader([line]))
            if header is None:
                header = [h.strip() for h in row]
                yield 0, header
                continue
            yield no, [c.strip() for c in row]


def load_counts(path, layout: DataLayout) -> BinnedCounts:
    """Read a ``day,bin,count`` CSV (1-based day and bin).

    Missing cells are zero and duplicate cells are summed.
    """
    counts = np.zeros((layout.periods, layout.bins_per_period), dtype=np.int64)
    rows = _data_rows(Path(path))
    for no, row in rows:
        if no == 0:
            if row != ["day", "bin", "count"]:
                raise DataFormatError(f"{path}: expected header 'day,bin,count', got {','.join(row)!r}")
            continue
        try:
            day, b, c = (int(v) for v in row)
        except ValueError:
            raise DataFormatError(f"{path}:{no}: cannot parse row {row!r} as day,bin,count") from None
        if not 1 <= day <= layout.periods:
            raise ValueError(f"{path}:{no}: day {day} outside 1..{layout.periods}")
        if not 1 <= b <= layout.bins_per_period:
            raise ValueError(f"{path}:{no}: bin {b} outside 1..{layout.bins_per_period}")
        if c < 0:
            raise ValueError(f"{path}:{no}: negative count {c}")
        counts[day - 1, b - 1] += c
    return BinnedCounts(layout, counts)


def read_event_times(path) -> np.ndarray:
    times = []
    for no, row in _data_rows(Path(path)):
        if no == 0:
            if row != ["time"]:
                raise DataFormatError(f"{path}: expected header 'time', got {','.join(row)!r}")
            continue
        try:
            (t,) = row
            times.append(float(t))
        except ValueError:
            raise DataFormatError(f"{path}:{no}: cannot parse row {row!r} as time") from None
    return np.sort(np.asarray(times, dtype=float))


def load_events(path, period: float, bins_per_period: int = 1, periods: int | None = None) -> EventPath:
    """Read a ``time`` CSV; ``periods`` defaults to ceil(max time / period)."""
    times = read_event_times(path)
    if periods is None:
        periods = max(1, math.ceil(times[-1] / period)) if times.size else 1
    return EventPath(DataLayout(period, bins_per_period, periods), times)


def write_counts(path, bc: BinnedCounts, header: str = "") -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "bin", "count"])
        for (i, j), c in np.ndenumerate(bc.counts):
            if c:
                w.writerow([i + 1, j + 1, int(c)])


def write_events(path, ep: EventPath, header: str = "") -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header)
        fh.write("time\n")
        for t in ep.times:
            fh.write(f"{float(t)!r}\n")


def bin_events(ep: EventPath) -> BinnedCounts:
    """Count events in the right-closed bins ((b-1)D, bD] of each day.

    An event at time exactly 0 goes to the first bin of day 1.
    """
    lay = ep.layout
    m = lay.bins_per_period
    g = np.ceil(ep.times / lay.bin_width).astype(np.int64) - 1
    g = np.clip(g, 0, lay.periods * m - 1)
    flat = np.bincount(g, minlength=lay.periods * m)
    return BinnedCounts(lay, flat.reshape(lay.periods, m))


def thin_counts(bc: BinnedCounts, retain_target: int, rng: np.random.Generator) -> BinnedCounts:
    """Keep each event independently with probability retain_target / total."""
    total = bc.total
    if retain_target < 0 or retain_target > total:
        raise ValueError(f"retain_target {retain_target} outside 0..{total}")
    if retain_target == total:
        return bc
    p = retain_target / total
    return BinnedCounts(bc.layout, rng.binomial(bc.counts, p))
