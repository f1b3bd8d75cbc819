import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import comb
from scipy.stats import chisquare, kstest, poisson

from splineintensity.prior import (
    PriorConfig,
    SplineState,
    grid_positions,
    grid_size,
    log_dim_prior,
    log_prior,
    sample_prior,
)


@pytest.fixture(scope="module")
def prior_draws():
    cfg = PriorConfig(order=4, mean_dim=10.0, lower=200.0, upper=20000.0, period=24.0)
    rng = np.random.default_rng(2024)
    return cfg, [sample_prior(cfg, rng) for _ in range(100_000)]


class TestGrid:
    def test_examples(self):
        assert grid_size(4) == 16
        assert grid_size(10) == 100

    @pytest.mark.parametrize("j,q", [(4, 4), (7, 4), (12, 3), (5, 2)])
    def test_free_positions(self, j, q):
        assert grid_size(j) - (j - q) == j * j - j + q

    def test_positions_inside_period(self):
        j = 6
        pos = grid_positions(np.arange(1, grid_size(j) + 1), j, 24.0)
        assert pos[0] > 0 and pos[-1] < 24.0
        np.testing.assert_allclose(np.diff(pos), 24.0 / 37)


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(order=1), dict(mean_dim=4.0), dict(lower=5.0, upper=5.0), dict(lower=-1.0), dict(period=0.0)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PriorConfig(**kwargs)


class TestLogPrior:
    def test_out_of_bounds(self):
        cfg = PriorConfig()
        s = SplineState(4, 24.0, [], [300.0, 400.0, 20000.5, 500.0])
        assert log_prior(s, cfg) == -np.inf

    def test_minimal_dimension(self):
        cfg = PriorConfig(order=3, mean_dim=4.0, lower=1.0, upper=5.0, period=1.0)
        s = SplineState(3, 1.0, [], [2.0, 3.0, 4.0])
        assert log_prior(s, cfg) == pytest.approx(-1.0 - 3 * math.log(4.0), rel=1e-14)

    def test_knot_term_exchangeable(self):
        cfg = PriorConfig()
        theta = np.full(6, 1000.0)
        a = SplineState(4, 24.0, [3, 17], theta)
        b = SplineState(4, 24.0, [1, 36], theta)
        assert log_prior(a, cfg) == log_prior(b, cfg)

    def test_against_scipy(self):
        cfg = PriorConfig(order=4, mean_dim=10.0, lower=200.0, upper=20000.0)
        rng = np.random.default_rng(0)
        for j in range(4, 15):
            s = sample_prior(cfg, rng)
            j = s.dim
            ref = (
                poisson.logpmf(j - 4, 6.0)
                - math.log(comb(j * j, j - 4, exact=True))
                - j * math.log(19800.0)
            )
            assert log_prior(s, cfg) == pytest.approx(ref, rel=1e-12)

    def test_dim_prior_normalised(self):
        cfg = PriorConfig(order=4, mean_dim=10.0)
        total = sum(math.exp(log_dim_prior(j, cfg)) for j in range(4, 80))
        assert total == pytest.approx(1.0, rel=1e-12)
        assert log_dim_prior(3, cfg) == -np.inf


class TestSamplePrior:
    def test_minimal_dimension_frequency(self, prior_draws):
        cfg, draws = prior_draws
        p = math.exp(-(cfg.mean_dim - cfg.order))
        freq = np.mean([d.dim == cfg.order for d in draws])
        assert abs(freq - p) < 4 * math.sqrt(p * (1 - p) / len(draws))

    def test_mean_dimension(self, prior_draws):
        cfg, draws = prior_draws
        dims = np.array([d.dim for d in draws])
        assert abs(dims.mean() - cfg.mean_dim) < 4 * dims.std() / math.sqrt(len(dims))

    def test_dimension_chi_square(self, prior_draws):
        cfg, draws = prior_draws
        k = np.array([d.dim - cfg.order for d in draws])
        top = 14  # pool the tail so every expected cell exceeds 5
        observed = np.bincount(np.minimum(k, top), minlength=top + 1)
        pmf = poisson.pmf(np.arange(top), cfg.mean_dim - cfg.order)
        expected = len(k) * np.append(pmf, 1 - pmf.sum())
        assert expected.min() > 5
        assert chisquare(observed, expected).pvalue > 0.01

    def test_theta_uniform_at_fixed_dim(self, prior_draws):
        cfg, draws = prior_draws
        at10 = np.array([d.theta for d in draws if d.dim == 10])
        assert len(at10) > 5000
        args = (cfg.lower, cfg.upper - cfg.lower)
        assert kstest(at10.ravel(), "uniform", args=args).pvalue > 0.01
        # family-wise level 0.01 over the ten coordinates
        for col in at10.T:
            assert kstest(col, "uniform", args=args).pvalue > 0.01 / at10.shape[1]

    def test_every_draw_valid(self, prior_draws):
        cfg, draws = prior_draws
        for d in draws:
            d.validate(cfg)
            assert np.all((d.knots.inner > 0) & (d.knots.inner < cfg.period))

    def test_knot_subsets_uniform(self):
        # j = q + 1 = 3 at q = 2: the single knot is uniform over 9 grid points
        cfg = PriorConfig(order=2, mean_dim=2.5, lower=0.0, upper=1.0, period=1.0)
        rng = np.random.default_rng(5)
        hits = [int(s.grid_idx[0]) for s in (sample_prior(cfg, rng) for _ in range(40_000)) if s.dim == 3]
        observed = np.bincount(hits, minlength=10)[1:]
        assert chisquare(observed).pvalue > 0.01

    def test_deterministic(self):
        cfg = PriorConfig()
        a = sample_prior(cfg, np.random.default_rng(9))
        b = sample_prior(cfg, np.random.default_rng(9))
        assert a.same_as(b)


class TestStateValidation:
    def test_wrong_knot_count(self):
        with pytest.raises(ValueError):
            SplineState(4, 24.0, [3], np.ones(4)).validate()

    def test_collision(self):
        with pytest.raises(ValueError):
            SplineState(2, 1.0, [3, 3], np.ones(4)).validate()

    def test_index_past_grid(self):
        with pytest.raises(ValueError):
            SplineState(2, 1.0, [10], np.ones(3)).validate()

    def test_immutable(self):
        s = SplineState(2, 1.0, [4], np.ones(3))
        with pytest.raises(ValueError):
            s.theta[0] = 2.0


@settings(max_examples=200, deadline=None)
@given(
    q=st.integers(2, 5),
    extra=st.floats(0.5, 8.0),
    lower=st.floats(0.0, 100.0),
    width=st.floats(0.1, 1e4),
    seed=st.integers(0, 2**32 - 1),
)
def test_sampled_states_satisfy_invariants(q, extra, lower, width, seed):
    cfg = PriorConfig(order=q, mean_dim=q + extra, lower=lower, upper=lower + width, period=1.0)
    s = sample_prior(cfg, np.random.default_rng(seed))
    s.validate(cfg)
    assert np.isfinite(log_prior(s, cfg))
