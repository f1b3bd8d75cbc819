"""Reversible-jump Metropolis-Hastings over (dimension, knots, coefficients).

Four moves: a Gaussian random walk on the coefficients, a one-step move of
a single knot on the grid, and a birth/death pair that adds or removes one
knot together with one coefficient.

Birth from dimension j re-expresses the current knots on the dimension j+1
grid, draws the new knot uniformly among the F free grid points and inserts
a seed coefficient ``u ~ N(eta, 1)`` at index ``m``. With lp the
unnormalised log posterior, the log acceptance ratio is

    lp(y) - lp(x) + log p_death(j+1) - log(j+1-q)
                  - log p_birth(j) + log F - log phi(u - eta)

and a death uses the negative of the same expression evaluated for the
reverse birth. The insertion map has unit Jacobian.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bspline import basis_inner_products, bin_integral_matrix, make_knot_set
from .prior import PriorConfig, SplineState, grid_positions, grid_size, log_prior

log = logging.getLogger(__name__)

MOVES = ("perturb", "knot_move", "birth", "death")
TARGET_RATE = 0.23
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class MoveSchedule:
    """Move probabilities; birth/death share ``1 - p_perturb - p_knot``."""

    p_perturb: float
    p_knot: float
    order: int
    mean_dim: float

    def __post_init__(self):
        if not (0 < self.p_perturb < 1 and 0 < self.p_knot < 1):
            raise ValueError("p_perturb and p_knot must lie in (0, 1)")
        if not self.p_perturb + self.p_knot < 1:
            raise ValueError(f"p_perturb + p_knot must be < 1, got {self.p_perturb + self.p_knot}")
        if not self.mean_dim > self.order:
            raise ValueError("mean_dim must exceed order")

    @property
    def p_jump(self) -> float:
        return 1.0 - self.p_perturb - self.p_knot

    def birth_prob(self, j: int) -> float:
        return self.p_jump * 2.0 ** (-(j - self.order) / (self.mean_dim - self.order))

    def death_prob(self, j: int) -> float:
        if j <= self.order:
            return 0.0
        return self.p_jump * (1.0 - 2.0 ** (-(j - self.order) / (self.mean_dim - self.order)))

    def probabilities(self, j: int) -> np.ndarray:
        return np.array([self.p_perturb, self.p_knot, self.birth_prob(j), self.death_prob(j)])


def select_move(j: int, ms: MoveSchedule, rng: np.random.Generator) -> str:
    probs = ms.probabilities(j)
    k = min(int(np.searchsorted(np.cumsum(probs), rng.random(), side="right")), 3)
    while probs[k] == 0:
        k -= 1
    return MOVES[k]


# ---------------------------------------------------------------------------
# random-walk scale


@dataclass(frozen=True)
class AdaptState:
    sigma: float
    window_accepts: int = 0
    window_total: int = 0
    frozen: bool = False

    def record(self, accepted: bool) -> "AdaptState":
        if self.frozen:
            return self
        return replace(self, window_accepts=self.window_accepts + accepted, window_total=self.window_total + 1)


def adapt_sigma(adapt: AdaptState, window: int) -> AdaptState:
    """Rescale sigma by exp(rate - 0.23), clipped to [0.5, 2], once a window is full."""
    if adapt.frozen or adapt.window_total < window:
        return adapt
    rate = adapt.window_accepts / adapt.window_total
    factor = min(max(math.exp(rate - TARGET_RATE), 0.5), 2.0)
    return AdaptState(adapt.sigma * factor)


# ---------------------------------------------------------------------------
# posterior evaluation


@dataclass(frozen=True, eq=False)
class Point:
    """A state with its cached design, log-likelihood and log-prior."""

    state: SplineState
    design: object
    loglik: float
    logprior: float

    @property
    def log_post(self) -> float:
        return self.loglik + self.logprior


class Posterior:
    def __init__(self, prior: PriorConfig, likelihood):
        self.prior = prior
        self.likelihood = likelihood

    def _point(self, state: SplineState, design) -> Point:
        lp = log_prior(state, self.prior)
        ll = self.likelihood.loglik(design, state.theta) if lp > -np.inf else -np.inf
        return Point(state, design, ll, lp)

    def evaluate(self, state: SplineState) -> Point:
        return self._point(state, self.likelihood.design(state.knots))

    def with_theta(self, point: Point, theta) -> Point:
        return self._point(point.state.with_theta(theta), point.design)

    def log_post(self, state: SplineState) -> float:
        return self.evaluate(state).log_post


def _accept(log_ratio: float, rng: np.random.Generator) -> bool:
    v = rng.random()
    if not log_ratio > -np.inf:  # also catches nan
        return False
    return log_ratio >= 0 or v < math.exp(log_ratio)


def metropolis_log_ratio(x: Point, y: Point) -> float:
    """Log acceptance ratio of the fixed-dimension moves, whose proposals are symmetric."""
    if y.log_post == -np.inf:
        return -np.inf
    return y.log_post - x.log_post


def acceptance_probability(log_ratio: float) -> float:
    if not log_ratio > -np.inf:
        return 0.0
    return 1.0 if log_ratio >= 0 else math.exp(log_ratio)


# ---------------------------------------------------------------------------
# fixed-dimension moves


def perturb_move(point: Point, post: Posterior, sigma: float, rng: np.random.Generator):
    u = rng.standard_normal(point.state.dim)
    new = post.with_theta(point, point.state.theta + sigma * u)
    if _accept(metropolis_log_ratio(point, new), rng):
        return new, True
    return point, False


def knot_neighbors(idx: np.ndarray, i: int, j: int):
    """Free grid positions left and right of knot ``i`` (None where blocked)."""
    p = int(idx[i])
    left = p - 1 if p - 1 >= 1 and (i == 0 or idx[i - 1] != p - 1) else None
    right = p + 1 if p + 1 <= grid_size(j) and (i == len(idx) - 1 or idx[i + 1] != p + 1) else None
    return left, right


def knot_move_probability(x: SplineState, y: SplineState) -> float:
    """Probability that the knot-move proposal from ``x`` produces ``y``.

    Staying put is excluded; it is not a transition.
    """
    if x.dim != y.dim or x.n_knots == 0 or not np.array_equal(x.theta, y.theta):
        return 0.0
    diff = np.flatnonzero(x.grid_idx != y.grid_idx)
    if len(diff) != 1:
        return 0.0
    i = int(diff[0])
    left, right = knot_neighbors(x.grid_idx, i, x.dim)
    if y.grid_idx[i] in (left, right):
        return 0.5 / x.n_knots
    return 0.0


def knot_move(point: Point, post: Posterior, rng: np.random.Generator):
    s = point.state
    if s.n_knots == 0:
        return point, False
    i = int(rng.integers(s.n_knots))
    left, right = knot_neighbors(s.grid_idx, i, s.dim)
    target = left if rng.random() < 0.5 else right
    if target is None:
        return point, False
    idx = s.grid_idx.copy()
    idx[i] = target
    new = post.evaluate(SplineState(s.order, s.period, idx, s.theta))
    if _accept(metropolis_log_ratio(point, new), rng):
        return new, True
    return point, False


# ---------------------------------------------------------------------------
# birth / death


def regrid(idx, j_from: int, j_to: int) -> np.ndarray:
    """Round grid indices at dimension ``j_from`` to the nearest ``j_to`` grid point.

    Ties go to the lower index; results are clamped into the target grid.
    """
    idx = np.asarray(idx, dtype=np.int64)
    den = grid_size(j_from) + 1
    quot, rem = np.divmod(idx * (grid_size(j_to) + 1), den)
    out = quot + (2 * rem > den)
    return np.clip(out, 1, grid_size(j_to))


def insertion_offset(new: int, left: int, right: int, order: int) -> int:
    """floor((q+1)(k' - k_left)/(k_right - k_left)) on integer grid indices, clamped to q."""
    return min((order + 1) * (new - left) // (right - left), order)


def _bracket(idx: np.ndarray, pos: int, j: int):
    # grid indices of the knots (or interval ends) around slot ``pos``
    left = int(idx[pos - 1]) if pos > 0 else 0
    right = int(idx[pos]) if pos < len(idx) else grid_size(j) + 1
    return left, right


def seed_mean(knots_after, theta: np.ndarray, m: int) -> float:
    """Weighted mean of the existing coefficients around insertion slot ``m``.

    Weights are the normalised inner products of the new basis function
    ``m`` with every other basis function of the enlarged basis.
    """
    w = np.delete(basis_inner_products(knots_after, m), m)
    return float(w @ theta / w.sum())


@dataclass(frozen=True)
class BirthTerms:
    """Everything the birth ratio needs besides the two log posteriors."""

    new_knot: int
    slot: int
    m: int
    seed: float
    eta: float
    n_free: int


def birth_terms(x: SplineState, y: SplineState) -> BirthTerms | None:
    """Decompose ``x -> y`` as a birth; None if no birth from ``x`` gives ``y``."""
    j, q = x.dim, x.order
    if y.dim != j + 1 or y.order != q or y.period != x.period:
        return None
    r = regrid(x.grid_idx, j, j + 1)
    if len(r) > 1 and np.any(np.diff(r) <= 0):
        return None
    extra = np.setdiff1d(y.grid_idx, r)
    if len(extra) != 1 or len(y.grid_idx) != len(r) + 1:
        return None
    new = int(extra[0])
    slot = int(np.searchsorted(r, new))
    if not np.array_equal(np.insert(r, slot, new), y.grid_idx):
        return None
    left, right = _bracket(r, slot, j + 1)
    m = slot + insertion_offset(new, left, right, q)
    if not np.array_equal(np.delete(y.theta, m), x.theta):
        return None
    eta = seed_mean(y.knots, x.theta, m)
    return BirthTerms(new, slot, m, float(y.theta[m]), eta, grid_size(j + 1) - len(r))


def birth_log_ratio(x: Point, y: Point, ms: MoveSchedule) -> float:
    """Log of the birth acceptance ratio for ``x -> y`` (``-inf`` if not a birth pair)."""
    terms = birth_terms(x.state, y.state)
    if terms is None:
        return -np.inf
    return _birth_log_ratio(x, y, ms, terms)


def _birth_log_ratio(x: Point, y: Point, ms: MoveSchedule, terms: BirthTerms) -> float:
    j, q = x.state.dim, x.state.order
    if y.log_post == -np.inf:
        return -np.inf
    if x.log_post == -np.inf:
        return np.inf
    log_seed = -0.5 * (terms.seed - terms.eta) ** 2 - _LOG_SQRT_2PI
    r = (
        y.log_post
        - x.log_post
        + math.log(ms.death_prob(j + 1))
        - math.log(j + 1 - q)
        - math.log(ms.birth_prob(j))
        + math.log(terms.n_free)
        - log_seed
    )
    return r


def death_log_ratio(y: Point, x: Point, ms: MoveSchedule) -> float:
    """Log acceptance ratio of the death ``y -> x``: minus the reverse birth's."""
    terms = birth_terms(x.state, y.state)
    if terms is None or not regrid_roundtrip(x.state, y.state, terms):
        return -np.inf
    return -_birth_log_ratio(x, y, ms, terms)


def regrid_roundtrip(x: SplineState, y: SplineState, terms: BirthTerms) -> bool:
    # a death lands on x only if regridding y's surviving knots down gives x's knots
    rest = np.delete(y.grid_idx, terms.slot)
    return np.array_equal(regrid(rest, y.dim, x.dim), x.grid_idx)


def propose_birth(point: Point, post: Posterior, ms: MoveSchedule, rng: np.random.Generator):
    """Draw a birth proposal; returns ``(y, terms)`` or None when impossible."""
    s = point.state
    j, q = s.dim, s.order
    r = regrid(s.grid_idx, j, j + 1)
    if len(r) > 1 and np.any(np.diff(r) <= 0):
        return None
    free = np.setdiff1d(np.arange(1, grid_size(j + 1) + 1), r)
    if len(free) == 0:
        return None
    new = int(free[rng.integers(len(free))])
    slot = int(np.searchsorted(r, new))
    left, right = _bracket(r, slot, j + 1)
    m = slot + insertion_offset(new, left, right, q)
    idx = np.insert(r, slot, new)
    knots = make_knot_set(q, s.period, grid_positions(idx, j + 1, s.period))
    eta = seed_mean(knots, s.theta, m)
    u = eta + rng.standard_normal()
    y_state = SplineState(q, s.period, idx, np.insert(s.theta, m, u))
    y_state.__dict__["knots"] = knots
    y = post.evaluate(y_state)
    return y, BirthTerms(new, slot, m, u, eta, len(free))


def birth_move(point: Point, post: Posterior, ms: MoveSchedule, rng: np.random.Generator):
    proposal = propose_birth(point, post, ms, rng)
    if proposal is None:
        return point, False
    y, terms = proposal
    if _accept(_birth_log_ratio(point, y, ms, terms), rng):
        return y, True
    return point, False


def propose_death(point: Point, post: Posterior, rng: np.random.Generator):
    """Draw a death proposal; returns ``(x, terms)`` or None when the reverse birth cannot reach ``point``."""
    s = point.state
    j1, q = s.dim, s.order
    if s.n_knots == 0:
        return None
    slot = int(rng.integers(s.n_knots))
    new = int(s.grid_idx[slot])
    rest = np.delete(s.grid_idx, slot)
    left, right = _bracket(rest, slot, j1)
    m = slot + insertion_offset(new, left, right, q)
    x_idx = regrid(rest, j1, j1 - 1)
    if not np.array_equal(regrid(x_idx, j1 - 1, j1), rest):
        return None
    theta = np.delete(s.theta, m)
    x = post.evaluate(SplineState(q, s.period, x_idx, theta))
    eta = seed_mean(s.knots, theta, m)
    terms = BirthTerms(new, slot, m, float(s.theta[m]), eta, grid_size(j1) - len(rest))
    return x, terms


def death_move(point: Point, post: Posterior, ms: MoveSchedule, rng: np.random.Generator):
    proposal = propose_death(point, post, rng)
    if proposal is None:
        return point, False
    x, terms = proposal
    if _accept(-_birth_log_ratio(x, point, ms, terms), rng):
        return x, True
    return point, False


# ---------------------------------------------------------------------------
# chain driver


@dataclass(frozen=True, eq=False)
class ChainDraw:
    iteration: int
    state: SplineState
    move: str
    accepted: bool
    log_post: float


@dataclass
class Chain:
    draws: list
    sigma: float
    proposed: dict = field(default_factory=lambda: dict.fromkeys(MOVES, 0))
    accepted: dict = field(default_factory=lambda: dict.fromkeys(MOVES, 0))
    burn_in_proposed: dict = field(default_factory=lambda: dict.fromkeys(MOVES, 0))
    burn_in_accepted: dict = field(default_factory=lambda: dict.fromkeys(MOVES, 0))

    def acceptance_rates(self) -> dict:
        return {k: (self.accepted[k] / self.proposed[k] if self.proposed[k] else float("nan")) for k in MOVES}


def flat_init(cfg: PriorConfig, rate: float) -> SplineState:
    """Dimension ``order``, every coefficient the (clamped) mean event rate."""
    level = cfg.lower if not np.isfinite(rate) else min(max(rate, cfg.lower), cfg.upper)
    return SplineState(cfg.order, cfg.period, [], np.full(cfg.order, float(level)))


def evenly_spaced_indices(j: int, order: int) -> np.ndarray:
    k = j - order
    return np.round(np.arange(1, k + 1) * (grid_size(j) + 1) / (k + 1)).astype(np.int64)


def fit_init(post: Posterior, max_dim: int | None = None) -> SplineState:
    """Best of evenly spaced knot sets for j = q..max_dim, scored by log posterior.

    Coefficients come from a least-squares fit to the per-bin mean counts,
    weighted by the inverse Poisson variance and clamped into the prior range.
    """
    cfg = post.prior
    edges, rates = post.likelihood.bin_rates()
    weights = 1.0 / np.sqrt(np.maximum(rates, 1.0))
    if max_dim is None:
        max_dim = int(math.ceil(2 * cfg.mean_dim))
    best = None
    for j in range(cfg.order, max(max_dim, cfg.order) + 1):
        idx = evenly_spaced_indices(j, cfg.order)
        state = SplineState(cfg.order, cfg.period, idx, np.full(j, cfg.lower))
        A = bin_integral_matrix(state.knots, edges)
        theta, *_ = np.linalg.lstsq(A * weights[:, None], rates * weights, rcond=None)
        point = post.evaluate(state.with_theta(np.clip(theta, cfg.lower, cfg.upper)))
        if best is None or point.log_post > best.log_post:
            best = point
    return best.state


def run_chain(
    post: Posterior,
    schedule: MoveSchedule,
    init: SplineState,
    iterations: int,
    burn_in: int,
    thin: int,
    rng: np.random.Generator,
    sigma: float | None = None,
    window: int = 100,
) -> Chain:
    """Run one chain; keep every ``thin``-th draw after ``burn_in`` iterations.

    ``sigma`` adapts during burn-in only and is frozen afterwards.
    """
    if not iterations > burn_in >= 0:
        raise ValueError(f"need iterations > burn_in >= 0, got {iterations}, {burn_in}")
    if thin < 1:
        raise ValueError(f"thin must be >= 1, got {thin}")
    cfg = post.prior
    init.validate(cfg)
    point = post.evaluate(init)
    if not np.isfinite(point.log_post):
        raise ValueError("initial state has zero posterior density")
    if sigma is None:
        sigma = (cfg.upper - cfg.lower) / 100.0
    adapt = AdaptState(float(sigma), frozen=burn_in == 0)
    chain = Chain(draws=[], sigma=adapt.sigma)

    for it in range(1, iterations + 1):
        if it == burn_in + 1:
            adapt = replace(adapt, frozen=True)
        move = select_move(point.state.dim, schedule, rng)
        if move == "perturb":
            point, ok = perturb_move(point, post, adapt.sigma, rng)
            adapt = adapt_sigma(adapt.record(ok), window)
        elif move == "knot_move":
            point, ok = knot_move(point, post, rng)
        elif move == "birth":
            point, ok = birth_move(point, post, schedule, rng)
        else:
            point, ok = death_move(point, post, schedule, rng)

        sampling = it > burn_in
        (chain.proposed if sampling else chain.burn_in_proposed)[move] += 1
        (chain.accepted if sampling else chain.burn_in_accepted)[move] += ok
        if sampling and (it - burn_in) % thin == 0:
            point.state.validate(cfg)
            chain.draws.append(ChainDraw(it, point.state, move, bool(ok), point.log_post))
    chain.sigma = adapt.sigma
    log.debug("chain finished: sigma=%g rates=%s", chain.sigma, chain.acceptance_rates())
    return chain
