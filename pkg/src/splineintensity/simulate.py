"""Thinning simulation of periodic Poisson processes and moment checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import gauss_nodes
from .data import DataLayout, EventPath


class BoundViolation(ValueError):
    """The intensity exceeded the dominating rate."""


def simulate_path(
    intensity,
    bound: float,
    periods: int,
    rng: np.random.Generator,
    period: float = 1.0,
    bins_per_period: int = 1,
) -> EventPath:
    """Lewis-Shedler thinning of a rate-``bound`` homogeneous process on [0, nT].

    ``intensity`` is a vectorised callable on [0, T], evaluated at ``t mod T``.
    """
    if not bound > 0:
        raise ValueError(f"bound must be positive, got {bound}")
    horizon = periods * period
    n = rng.poisson(bound * horizon)
    cand = np.sort(rng.uniform(0.0, horizon, size=n))
    lam = np.asarray(intensity(np.mod(cand, period)), dtype=float) * np.ones(n)
    if n and lam.max() > bound:
        t = cand[np.argmax(lam)]
        raise BoundViolation(f"intensity {lam.max()} exceeds bound {bound} at t={t}")
    keep = rng.uniform(0.0, bound, size=n) < lam
    return EventPath(DataLayout(period, bins_per_period, periods), cand[keep])


@dataclass(frozen=True)
class MomentReport:
    mean: float
    var: float
    mean_exact: float
    var_exact: float
    z_mean: float
    z_var: float
    replications: int


def _quad(g, period: float, pieces: int = 64, order: int = 20) -> float:
    nodes, weights = gauss_nodes(np.linspace(0.0, period, pieces + 1), order)
    return float(weights @ g(nodes))


def moment_check(
    intensity,
    f,
    periods: int,
    replications: int,
    rng: np.random.Generator,
    period: float = 1.0,
    bound: float | None = None,
) -> MomentReport:
    """Compare Monte Carlo moments of sum_e f(t_e mod T) with n int f lam and n int f^2 lam."""
    if bound is None:
        grid = np.linspace(0.0, period, 4097)
        bound = float(np.max(intensity(grid))) * 1.05 or 1.0
    samples = np.empty(replications)
    for r in range(replications):
        ep = simulate_path(intensity, bound, periods, rng, period)
        samples[r] = np.sum(f(np.mod(ep.times, period)))
    mean_exact = periods * _quad(lambda t: f(t) * intensity(t), period)
    var_exact = periods * _quad(lambda t: f(t) ** 2 * intensity(t), period)
    mean = float(samples.mean())
    var = float(samples.var(ddof=1))
    z_mean = (mean - mean_exact) / np.sqrt(var_exact / replications)
    dev2 = (samples - mean) ** 2
    z_var = (var - var_exact) / np.sqrt(dev2.var(ddof=1) / replications)
    return MomentReport(mean, var, mean_exact, var_exact, float(z_mean), float(z_var), replications)
