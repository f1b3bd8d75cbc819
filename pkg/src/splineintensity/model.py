"""Poisson log-likelihoods for a spline intensity.

Binned data:  sum_b [S_b log lam_b - n lam_b] - sum_ib log C_ib!
Full path:    -n (int_0^T lam - T) + sum_e log lam(t_e mod T)

Both return ``-inf`` rather than raising when the intensity is not
strictly positive where it matters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import KnotSet, _local_basis, bin_integral_matrix, cumulative_integrals
from .data import BinnedCounts, DataLayout, EventPath
from .prior import SplineState


@dataclass(frozen=True, eq=False)
class BinIntensities:
    values: np.ndarray
    layout: DataLayout


def _check_period(state: SplineState, layout: DataLayout) -> None:
    if state.period != layout.period:
        raise ValueError(f"state period {state.period} != data period {layout.period}")


def bin_intensities(state: SplineState, layout: DataLayout) -> BinIntensities:
    _check_period(state, layout)
    A = bin_integral_matrix(state.knots, layout.edges)
    return BinIntensities(A @ state.theta, layout)


def _binned_from_lambda(lam: np.ndarray, bc: BinnedCounts) -> float:
    if np.any(lam <= 0):
        return -np.inf
    n = bc.layout.periods
    return float(bc.col_sums @ np.log(lam) - n * lam.sum() - bc.log_factorial_sum)


def loglik_binned(state: SplineState, bc: BinnedCounts) -> float:
    return _binned_from_lambda(bin_intensities(state, bc.layout).values, bc)


def loglik_full(state: SplineState, ep: EventPath) -> float:
    _check_period(state, ep.layout)
    lik = PathLikelihood(ep)
    return lik.loglik(lik.design(state.knots), state.theta)


class BinnedLikelihood:
    """Binned-count likelihood with a per-knot-set design matrix."""

    def __init__(self, bc: BinnedCounts):
        self.data = bc
        self.layout = bc.layout

    def design(self, ks: KnotSet) -> np.ndarray:
        return bin_integral_matrix(ks, self.layout.edges)

    def loglik(self, design: np.ndarray, theta: np.ndarray) -> float:
        return _binned_from_lambda(design @ theta, self.data)

    def mean_rate(self) -> float:
        return self.data.total / (self.layout.periods * self.layout.period)

    def bin_rates(self):
        """Bin edges and mean count per period in each bin."""
        return self.layout.edges, self.data.col_sums / self.layout.periods


class PathLikelihood:
    """Full-observation likelihood; the design holds the basis at every event phase."""

    def __init__(self, ep: EventPath):
        self.data = ep
        self.layout = ep.layout
        self._phases = ep.phases()

    def design(self, ks: KnotSet):
        total = cumulative_integrals(ks, [ks.period])[0]
        first, vals = _local_basis(ks.full, ks.order, ks.dim, self._phases)
        idx = first[:, None] + np.arange(ks.order)
        return total, idx, vals

    def loglik(self, design, theta: np.ndarray) -> float:
        total, idx, vals = design
        n, T = self.layout.periods, self.layout.period
        at_events = np.einsum("pr,pr->p", vals, theta[idx])
        if np.any(at_events <= 0):
            return -np.inf
        return float(-n * (total @ theta - T) + np.log(at_events).sum())

    def mean_rate(self) -> float:
        return len(self.data.times) / (self.layout.periods * self.layout.period)

    def bin_rates(self, bins: int = 256):
        edges = np.linspace(0.0, self.layout.period, bins + 1)
        counts, _ = np.histogram(self._phases, bins=edges)
        return edges, counts / self.layout.periods


class FlatLikelihood:
    """Constant zero log-likelihood; the posterior is the prior."""

    def design(self, ks: KnotSet):
        return None

    def loglik(self, design, theta: np.ndarray) -> float:
        return 0.0

    def mean_rate(self) -> float:
        return float("nan")
