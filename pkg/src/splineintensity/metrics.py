"""Distances between Poisson-process laws indexed by intensities on [0, T].

Intensities are either :class:`SplineState` objects or vectorised callables.
Integrals use Gauss-Legendre quadrature on the union of both knot sets,
each knot interval further cut into ``pieces`` equal parts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import gauss_nodes
from .data import DataLayout
from .model import bin_intensities
from .prior import SplineState

QUAD_ORDER = 16
QUAD_PIECES = 4
SUP_GRID = 4096


def _breaks(lam) -> np.ndarray:
    if isinstance(lam, SplineState):
        return lam.knots.inner
    return np.asarray(getattr(lam, "breaks", ()), dtype=float)


def _nodes(lam, lam2, period: float, order: int, pieces: int):
    inner = np.union1d(_breaks(lam), _breaks(lam2))
    coarse = np.concatenate([[0.0], inner[(inner > 0) & (inner < period)], [period]])
    fine = np.concatenate(
        [np.linspace(a, b, pieces + 1)[:-1] for a, b in zip(coarse[:-1], coarse[1:])] + [[period]]
    )
    return gauss_nodes(fine, order)


def _period(lam, lam2, period):
    for x in (lam, lam2):
        if isinstance(x, SplineState):
            if period is not None and period != x.period:
                raise ValueError(f"period {period} disagrees with spline period {x.period}")
            period = x.period
    if period is None:
        raise ValueError("period is required when neither intensity is a spline")
    return float(period)


def _values(lam, t: np.ndarray) -> np.ndarray:
    return np.asarray(lam(t), dtype=float) * np.ones_like(t)


class _Pair:
    """Both intensities at shared quadrature nodes."""

    def __init__(self, lam, lam2, period=None, order=QUAD_ORDER, pieces=QUAD_PIECES):
        self.period = _period(lam, lam2, period)
        self.nodes, self.weights = _nodes(lam, lam2, self.period, order, pieces)
        self.a = _values(lam, self.nodes)
        self.b = _values(lam2, self.nodes)
        if np.any(self.a < 0) or np.any(self.b < 0):
            raise ValueError("intensity takes negative values")

    def integral(self, g: np.ndarray) -> float:
        return float(self.weights @ g)


def hellinger_sq(lam, lam2, period=None, **quad) -> float:
    """2 (1 - exp(-1/2 int (sqrt lam - sqrt lam2)^2))."""
    p = _Pair(lam, lam2, period, **quad)
    d = p.integral((np.sqrt(p.a) - np.sqrt(p.b)) ** 2)
    return float(-2.0 * np.expm1(-0.5 * d))


def _log_ratio(p: _Pair):
    # log(lam2 / lam) where lam2 > 0; +inf flags lam == 0 there
    with np.errstate(divide="ignore"):
        r = np.where(p.b > 0, np.log(p.b) - np.log(p.a), 0.0)
    return r


def kl(lam, lam2, period=None, **quad) -> float:
    """K(p_lam, p_lam2) = int (lam - lam2) + int lam2 log(lam2 / lam); lam2 plays the truth."""
    p = _Pair(lam, lam2, period, **quad)
    r = _log_ratio(p)
    if np.any(np.isinf(r)):
        return float("inf")
    return p.integral(p.a - p.b + p.b * r)


def variance_v(lam, lam2, period=None, **quad) -> float:
    """V(p_lam, p_lam2) = int lam2 log^2(lam2 / lam)."""
    p = _Pair(lam, lam2, period, **quad)
    r = _log_ratio(p)
    if np.any(np.isinf(r)):
        return float("inf")
    return p.integral(p.b * r**2)


def sqrt_l2(lam, lam2, period=None, **quad) -> float:
    """|| sqrt lam - sqrt lam2 ||_2."""
    p = _Pair(lam, lam2, period, **quad)
    return float(np.sqrt(p.integral((np.sqrt(p.a) - np.sqrt(p.b)) ** 2)))


def l2(lam, lam2, period=None, **quad) -> float:
    p = _Pair(lam, lam2, period, **quad)
    return float(np.sqrt(p.integral((p.a - p.b) ** 2)))


def sup_dist(lam, lam2, period=None) -> float:
    """max |lam - lam2| over a 4096-point grid plus all knots."""
    T = _period(lam, lam2, period)
    t = np.union1d(np.linspace(0.0, T, SUP_GRID), np.union1d(_breaks(lam), _breaks(lam2)))
    return float(np.max(np.abs(_values(lam, t) - _values(lam2, t))))


def bin_integrals(lam, layout: DataLayout, **quad) -> np.ndarray:
    """Integrals of ``lam`` over the bins of ``layout``; exact for splines."""
    if isinstance(lam, SplineState):
        return bin_intensities(lam, layout).values
    order = quad.get("order", QUAD_ORDER)
    nodes, weights = gauss_nodes(layout.edges, order)
    vals = weights * _values(lam, nodes)
    return vals.reshape(layout.bins_per_period, order).sum(axis=1)


def rho(lam, lam2, layout: DataLayout, **quad) -> float:
    """sqrt(sum_b (sqrt lam_b - sqrt lam2_b)^2) over bin integrals."""
    _period(lam, lam2, layout.period)
    a = bin_integrals(lam, layout, **quad)
    b = bin_integrals(lam2, layout, **quad)
    return float(np.sqrt(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2)))


@dataclass(frozen=True)
class DistanceBoundsReport:
    hellinger_bounds: bool
    kl_bound: bool
    sqrt_l2_bound: bool

    @property
    def all(self) -> bool:
        return self.hellinger_bounds and self.kl_bound and self.sqrt_l2_bound


def check_distance_bounds(lam, lam2, period=None, slack: float = 1e-8, **quad) -> DistanceBoundsReport:
    """Check the three inequalities tying h, K and V to the root-intensity L2 distance.

    (i)   (d ^ 1) / sqrt 2 <= h <= sqrt 2 (d ^ 1),   d = ||sqrt lam - sqrt lam2||_2
    (ii)  K <= 3 d^2 + V
    (iii) d^2 <= 1/4 int (lam v lam2) log^2(lam / lam2)
    """
    p = _Pair(lam, lam2, period, **quad)
    d2 = p.integral((np.sqrt(p.a) - np.sqrt(p.b)) ** 2)
    d = np.sqrt(d2)
    h = np.sqrt(-2.0 * np.expm1(-0.5 * d2))
    r = _log_ratio(p)
    k = p.integral(p.a - p.b + p.b * r)
    v = p.integral(p.b * r**2)
    rhs3 = 0.25 * p.integral(np.maximum(p.a, p.b) * r**2)
    cap = min(d, 1.0)
    return DistanceBoundsReport(
        bool(cap / np.sqrt(2) <= h + slack and h <= np.sqrt(2) * cap + slack),
        bool(k <= 3 * d2 + v + slack),
        bool(d2 <= rhs3 + slack),
    )


def all_distances(lam, lam2, layout: DataLayout) -> dict:
    T = layout.period
    return {
        "hellinger_sq": hellinger_sq(lam, lam2, T),
        "kl": kl(lam, lam2, T),
        "variance_v": variance_v(lam, lam2, T),
        "rho": rho(lam, lam2, layout),
        "sqrt_l2": sqrt_l2(lam, lam2, T),
        "sup_dist": sup_dist(lam, lam2, T),
    }
