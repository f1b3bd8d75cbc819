"""Posterior summaries of a chain such as pointwise bands and knot histograms.

Band quantiles use linear interpolation between order statistics
(``numpy.quantile(method="linear")``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import basis_matrix
from .sampler import MOVES


@dataclass(frozen=True, eq=False)
class CredibleBand:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float


def evaluate_draws(draws, grid: np.ndarray) -> np.ndarray:
    """``(len(draws), len(grid))`` matrix of draw intensities."""
    return np.array([basis_matrix(d.state.knots, grid) @ d.state.theta for d in draws])


def band(draws, grid_points: int = 512, level: float = 0.95) -> CredibleBand:
    if len(draws) < 1:
        raise ValueError("no draws to summarise")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    period = draws[0].state.period
    grid = np.linspace(0.0, period, grid_points)
    vals = evaluate_draws(draws, grid)
    lower, upper = np.quantile(vals, [(1 - level) / 2, (1 + level) / 2], axis=0, method="linear")
    return CredibleBand(grid, vals.mean(axis=0), lower, upper, level)


@dataclass(frozen=True, eq=False)
class KnotHistogram:
    edges: np.ndarray
    counts: np.ndarray


def knot_histogram(draws, bins: int = 96, period: float | None = None) -> KnotHistogram:
    """Pooled inner-knot positions binned uniformly on (0, T)."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if period is None:
        if not draws:
            raise ValueError("period is required for an empty chain")
        period = draws[0].state.period
    edges = np.linspace(0.0, period, bins + 1)
    knots = np.concatenate([d.state.knots.inner for d in draws]) if draws else np.empty(0)
    counts, _ = np.histogram(knots, bins=edges)
    return KnotHistogram(edges, counts)


@dataclass(frozen=True)
class DimTrace:
    iterations: np.ndarray
    dims: np.ndarray
    proposed: dict
    accepted: dict

    @property
    def rates(self) -> dict:
        return {k: (self.accepted[k] / self.proposed[k] if self.proposed[k] else 0.0) for k in MOVES}


def dim_trace(draws) -> DimTrace:
    proposed = dict.fromkeys(MOVES, 0)
    accepted = dict.fromkeys(MOVES, 0)
    for d in draws:
        proposed[d.move] += 1
        accepted[d.move] += d.accepted
    return DimTrace(
        np.array([d.iteration for d in draws], dtype=np.int64),
        np.array([d.state.dim for d in draws], dtype=np.int64),
        proposed,
        accepted,
    )
