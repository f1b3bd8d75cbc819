"""B-splines on [0, T] with q-fold boundary knots.

Basis functions are evaluated with the Cox-de Boor recursion in its
triangular (Piegl & Tiller A2.2) form, vectorised over evaluation points.
Integrals use the antiderivative identity

    int_0^x B_{i,q} = (t_{i+q} - t_i) / q * sum_{l > i} N_{l,q+1}(x)

where N are the order q+1 B-splines on the knot vector with one extra
boundary knot at each end, so bin integrals carry no quadrature error.

Basis indices are 0-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss


@dataclass(frozen=True, eq=False)
class KnotSet:
    """Simple inner knots plus repeated boundary knots 0 and ``period``."""

    order: int
    period: float
    inner: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.inner) + self.order

    @cached_property
    def full(self) -> np.ndarray:
        q = self.order
        return np.concatenate([np.zeros(q), self.inner, np.full(q, float(self.period))])

    @cached_property
    def breaks(self) -> np.ndarray:
        """Distinct breakpoints 0 < inner... < T."""
        return np.concatenate([[0.0], self.inner, [float(self.period)]])


@dataclass(frozen=True)
class BasisValues:
    values: np.ndarray
    at: float


def make_knot_set(order: int, period: float, inner) -> KnotSet:
    """Validate and build a :class:`KnotSet`.

    Raises ``ValueError`` naming the first offending inner-knot index when
    knots are not strictly increasing or leave the open interval (0, period).
    """
    if int(order) != order or order < 2:
        raise ValueError(f"order must be an integer >= 2, got {order}")
    if not period > 0:
        raise ValueError(f"period must be positive, got {period}")
    inner = np.asarray(inner, dtype=float).reshape(-1)
    for i, k in enumerate(inner):
        if not 0.0 < k < period:
            raise ValueError(f"inner knot {i} = {k} outside (0, {period})")
        if i > 0 and not k > inner[i - 1]:
            raise ValueError(f"inner knot {i} = {k} not strictly greater than knot {i - 1}")
    inner = inner.copy()
    inner.setflags(write=False)
    return KnotSet(int(order), float(period), inner)


def _spans(full: np.ndarray, order: int, dim: int, t: np.ndarray) -> np.ndarray:
    # last non-empty span is used for t == T (closed right end)
    s = np.searchsorted(full, t, side="right") - 1
    return np.clip(s, order - 1, dim - 1)


def _local_basis(full: np.ndarray, order: int, dim: int, t: np.ndarray):
    """Nonzero basis values at each t.

    Returns ``(first, vals)`` where ``vals[p, r]`` is basis ``first[p] + r``.
    """
    t = np.asarray(t, dtype=float)
    s = _spans(full, order, dim, t)
    npts = t.shape[0]
    vals = np.zeros((npts, order))
    vals[:, 0] = 1.0
    left = np.empty((npts, order))
    right = np.empty((npts, order))
    for d in range(1, order):
        left[:, d] = t - full[s + 1 - d]
        right[:, d] = full[s + d] - t
        saved = np.zeros(npts)
        for r in range(d):
            temp = vals[:, r] / (right[:, r + 1] + left[:, d - r])
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, d - r] * temp
        vals[:, d] = saved
    return s - order + 1, vals


def _check_domain(ks: KnotSet, t: np.ndarray) -> None:
    if t.size and (np.min(t) < 0.0 or np.max(t) > ks.period or np.isnan(t).any()):
        raise ValueError(f"evaluation point outside [0, {ks.period}]")


def basis_matrix(ks: KnotSet, t) -> np.ndarray:
    """Dense ``(len(t), dim)`` matrix of all basis functions at the points ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_domain(ks, t)
    first, vals = _local_basis(ks.full, ks.order, ks.dim, t)
    out = np.zeros((t.shape[0], ks.dim))
    rows = np.arange(t.shape[0])[:, None]
    out[rows, first[:, None] + np.arange(ks.order)] = vals
    return out


def eval_basis(ks: KnotSet, t: float) -> BasisValues:
    return BasisValues(basis_matrix(ks, [t])[0], float(t))


def _check_theta(ks: KnotSet, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ks.dim,):
        raise ValueError(f"coefficient vector has shape {theta.shape}, expected ({ks.dim},)")
    return theta


def eval_spline(ks: KnotSet, theta, t):
    """Spline value(s) at ``t``; scalar in, scalar out."""
    theta = _check_theta(ks, theta)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_domain(ks, t)
    first, vals = _local_basis(ks.full, ks.order, ks.dim, t)
    idx = first[:, None] + np.arange(ks.order)
    out = np.einsum("pr,pr->p", vals, theta[idx])
    return float(out[0]) if scalar else out


def cumulative_integrals(ks: KnotSet, x) -> np.ndarray:
    """Matrix ``F[p, i] = int_0^{x_p} B_i(s) ds``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(ks, x)
    q, j = ks.order, ks.dim
    full = ks.full
    aug = np.concatenate([[0.0], full, [float(ks.period)]])
    first, vals = _local_basis(aug, q + 1, j + 1, x)
    up = np.zeros((x.shape[0], j + 1))
    rows = np.arange(x.shape[0])[:, None]
    up[rows, first[:, None] + np.arange(q + 1)] = vals
    # tail[:, l] = sum_{l' >= l} N_{l'}
    tail = np.cumsum(up[:, ::-1], axis=1)[:, ::-1]
    scale = (full[q:q + j] - full[:j]) / q
    return tail[:, 1:] * scale


def bin_integral_matrix(ks: KnotSet, edges) -> np.ndarray:
    """``A[b, i] = int_{edges[b]}^{edges[b+1]} B_i``; bin integrals are ``A @ theta``."""
    cum = cumulative_integrals(ks, edges)
    return np.diff(cum, axis=0)


def integrate_spline(ks: KnotSet, theta, a: float, b: float) -> float:
    """Exact integral of the spline over [a, b]."""
    theta = _check_theta(ks, theta)
    if a > b:
        raise ValueError(f"integration bounds reversed: a={a} > b={b}")
    cum = cumulative_integrals(ks, [a, b])
    return float((cum[1] - cum[0]) @ theta)


def gauss_nodes(breaks: np.ndarray, npoints: int):
    """Gauss-Legendre nodes and weights on every interval of ``breaks``."""
    x, w = leggauss(npoints)
    a, b = breaks[:-1], breaks[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x
    weights = half[:, None] * w
    return nodes.ravel(), weights.ravel()


def basis_inner_products(ks: KnotSet, m: int) -> np.ndarray:
    """Normalised weights ``w_i`` proportional to ``int B_m B_i``.

    Uses ``order`` Gauss points per knot interval, exact for the degree
    2(q-1) products.
    """
    if not 0 <= m < ks.dim:
        raise IndexError(f"basis index {m} out of range for dimension {ks.dim}")
    nodes, weights = gauss_nodes(ks.breaks, ks.order)
    B = basis_matrix(ks, nodes)
    w = (weights * B[:, m]) @ B
    w[np.abs(np.arange(ks.dim) - m) >= ks.order] = 0.0
    return w / w.sum()
