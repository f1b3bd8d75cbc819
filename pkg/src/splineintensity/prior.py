"""Free-knot spline prior.

A draw picks the dimension ``J = q + Poisson(mu - q)``, then ``J - q`` inner
knots uniformly without replacement from the ``G(J) = J**2`` interior grid
points ``i * T / (G(J) + 1)``, then ``J`` coefficients i.i.d. uniform on
``[lower, upper]``. Knots are stored as integer grid indices so knot
equality is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .bspline import KnotSet, make_knot_set


@dataclass(frozen=True)
class PriorConfig:
    order: int = 4
    mean_dim: float = 10.0
    lower: float = 200.0
    upper: float = 20000.0
    period: float = 24.0

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 2:
            raise ValueError(f"order must be an integer >= 2, got {self.order}")
        if not self.mean_dim > self.order:
            raise ValueError(f"mean_dim must exceed order ({self.order}), got {self.mean_dim}")
        if not 0 <= self.lower < self.upper:
            raise ValueError(f"need 0 <= lower < upper, got {self.lower}, {self.upper}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")


def grid_size(j: int) -> int:
    """Number of candidate inner-knot positions at dimension ``j``."""
    return j * j


def grid_positions(idx, j: int, period: float) -> np.ndarray:
    return np.asarray(idx, dtype=float) * (period / (grid_size(j) + 1))


@dataclass(frozen=True, eq=False)
class SplineState:
    """A point ``(j, knot indices, theta)`` of the sampler."""

    order: int
    period: float
    grid_idx: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        idx = np.array(self.grid_idx, dtype=np.int64).reshape(-1)
        theta = np.array(self.theta, dtype=float).reshape(-1)
        idx.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "grid_idx", idx)
        object.__setattr__(self, "theta", theta)

    @property
    def dim(self) -> int:
        return len(self.theta)

    @property
    def n_knots(self) -> int:
        return len(self.grid_idx)

    @cached_property
    def knots(self) -> KnotSet:
        return make_knot_set(self.order, self.period, grid_positions(self.grid_idx, self.dim, self.period))

    def validate(self, cfg: PriorConfig | None = None) -> None:
        """Raise ``ValueError`` if any state invariant fails."""
        q, j, idx = self.order, self.dim, self.grid_idx
        if j < q:
            raise ValueError(f"dimension {j} below order {q}")
        if len(idx) != j - q:
            raise ValueError(f"{len(idx)} knot indices for dimension {j}, expected {j - q}")
        if len(idx) and (idx[0] < 1 or idx[-1] > grid_size(j) or np.any(np.diff(idx) <= 0)):
            raise ValueError(f"knot indices {idx.tolist()} not strictly increasing within 1..{grid_size(j)}")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("non-finite coefficient")
        if cfg is not None:
            if (self.order, self.period) != (cfg.order, cfg.period):
                raise ValueError("state order/period disagree with prior configuration")
            if np.any(self.theta < cfg.lower) or np.any(self.theta > cfg.upper):
                raise ValueError(f"coefficients outside [{cfg.lower}, {cfg.upper}]")

    def with_theta(self, theta) -> "SplineState":
        new = SplineState(self.order, self.period, self.grid_idx, theta)
        if "knots" in self.__dict__ and new.dim == self.dim:
            new.__dict__["knots"] = self.knots
        return new

    def __call__(self, t):
        from .bspline import eval_spline

        return eval_spline(self.knots, self.theta, t)

    def same_as(self, other: "SplineState") -> bool:
        return (
            self.order == other.order
            and self.period == other.period
            and np.array_equal(self.grid_idx, other.grid_idx)
            and np.array_equal(self.theta, other.theta)
        )


def log_dim_prior(j: int, cfg: PriorConfig) -> float:
    """log P(J = j) for J = q + Poisson(mu - q)."""
    k = j - cfg.order
    if k < 0:
        return -np.inf
    rate = cfg.mean_dim - cfg.order
    return k * np.log(rate) - rate - gammaln(k + 1.0)


def log_knot_prior(j: int, order: int) -> float:
    """-log C(G(j), j - q): uniform over index subsets."""
    g, k = grid_size(j), j - order
    return -(gammaln(g + 1.0) - gammaln(k + 1.0) - gammaln(g - k + 1.0))


def log_prior(state: SplineState, cfg: PriorConfig) -> float:
    theta = state.theta
    if np.any(theta < cfg.lower) or np.any(theta > cfg.upper):
        return -np.inf
    j = state.dim
    return float(
        log_dim_prior(j, cfg) + log_knot_prior(j, cfg.order) - j * np.log(cfg.upper - cfg.lower)
    )


def sample_prior(cfg: PriorConfig, rng: np.random.Generator) -> SplineState:
    j = cfg.order + int(rng.poisson(cfg.mean_dim - cfg.order))
    idx = np.sort(rng.choice(grid_size(j), size=j - cfg.order, replace=False)) + 1
    theta = rng.uniform(cfg.lower, cfg.upper, size=j)
    return SplineState(cfg.order, cfg.period, idx, theta)
