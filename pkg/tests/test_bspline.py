import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.interpolate import BSpline

from splineintensity.bspline import (
    basis_inner_products,
    basis_matrix,
    bin_integral_matrix,
    eval_basis,
    eval_spline,
    integrate_spline,
    make_knot_set,
)


def random_knots(rng, period=1.0):
    q = int(rng.integers(2, 6))
    inner = np.unique(rng.uniform(0, period, int(rng.integers(0, 10))))
    inner = inner[(inner > 0) & (inner < period)]
    return make_knot_set(q, period, inner)


class TestMakeKnotSet:
    def test_linear_single_knot(self):
        ks = make_knot_set(2, 1.0, [0.5])
        np.testing.assert_array_equal(ks.full, [0, 0, 0.5, 1, 1])
        assert ks.dim == 3

    def test_no_inner_knots(self):
        ks = make_knot_set(4, 24.0, [])
        np.testing.assert_array_equal(ks.full, [0] * 4 + [24] * 4)
        assert ks.dim == 4

    def test_repeated_knot_rejected(self):
        with pytest.raises(ValueError, match="inner knot 1"):
            make_knot_set(2, 1.0, [0.5, 0.5])

    @pytest.mark.parametrize("inner", [[0.0], [1.0], [0.3, 1.2]])
    def test_out_of_range(self, inner):
        with pytest.raises(ValueError, match="outside"):
            make_knot_set(2, 1.0, inner)

    def test_bad_order(self):
        with pytest.raises(ValueError):
            make_knot_set(1, 1.0, [])


class TestEvalBasis:
    def test_hat_functions(self):
        ks = make_knot_set(2, 1.0, [0.5])
        np.testing.assert_allclose(eval_basis(ks, 0.25).values, [0.5, 0.5, 0.0])

    def test_right_endpoint(self):
        ks = make_knot_set(2, 1.0, [0.5])
        np.testing.assert_array_equal(eval_basis(ks, 1.0).values, [0, 0, 1])

    def test_left_endpoint(self):
        ks = make_knot_set(4, 2.0, [0.7, 1.1])
        np.testing.assert_array_equal(eval_basis(ks, 0.0).values, [1, 0, 0, 0, 0, 0])

    def test_domain_error(self):
        ks = make_knot_set(2, 1.0, [0.5])
        with pytest.raises(ValueError):
            eval_basis(ks, 1.0001)
        with pytest.raises(ValueError):
            eval_basis(ks, -0.1)

    def test_partition_of_unity_and_support(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            ks = random_knots(rng, 3.0)
            t = np.concatenate([rng.uniform(0, 3.0, 20), ks.inner, [0.0, 3.0]])
            B = basis_matrix(ks, t)
            assert np.all(B >= 0)
            np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)
            for row in B:
                nz = np.flatnonzero(row)
                assert len(nz) <= ks.order
                assert np.all(np.diff(nz) == 1)

    def test_matches_scipy(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            ks = random_knots(rng, 5.0)
            t = rng.uniform(0, 5.0, 30)
            ours = basis_matrix(ks, t)
            ref = BSpline.design_matrix(t, ks.full, ks.order - 1).toarray()
            np.testing.assert_allclose(ours, ref, atol=1e-13)


class TestEvalSpline:
    def test_constant(self):
        ks = make_knot_set(4, 24.0, [3.0, 10.0, 17.5])
        t = np.linspace(0, 24, 101)
        np.testing.assert_allclose(eval_spline(ks, np.full(ks.dim, 7.5), t), 7.5, rtol=1e-14)

    def test_hat_peak(self):
        ks = make_knot_set(2, 1.0, [0.5])
        assert eval_spline(ks, [0, 1, 0], 0.5) == 1.0

    def test_hat_mix(self):
        ks = make_knot_set(2, 1.0, [0.5])
        assert eval_spline(ks, [2, 4, 6], 0.25) == pytest.approx(3.0)

    def test_dimension_mismatch(self):
        ks = make_knot_set(2, 1.0, [0.5])
        with pytest.raises(ValueError):
            eval_spline(ks, [1, 2], 0.3)

    def test_cubic_continuity_at_knots(self):
        rng = np.random.default_rng(3)
        ks = make_knot_set(4, 1.0, [0.2, 0.45, 0.5, 0.8])
        theta = rng.uniform(1, 5, ks.dim)
        h = 1e-8
        for k in ks.inner:
            lo, mid, hi = eval_spline(ks, theta, [k - h, k, k + h])
            assert abs(hi - lo) < 1e-6
            # first divided differences on either side agree
            d_left = (mid - lo) / h
            d_right = (hi - mid) / h
            assert abs(d_left - d_right) < 1e-4 * max(1.0, abs(d_left))
        # second differences at a coarser step
        h = 1e-4
        for k in ks.inner:
            v = eval_spline(ks, theta, [k - 2 * h, k - h, k, k + h, k + 2 * h])
            dd_left = (v[2] - 2 * v[1] + v[0]) / h**2
            dd_right = (v[4] - 2 * v[3] + v[2]) / h**2
            assert abs(dd_left - dd_right) < 1e-2 * max(1.0, abs(dd_left))


class TestIntegrate:
    def test_constant(self):
        ks = make_knot_set(3, 2.0, [0.4, 1.5])
        assert integrate_spline(ks, np.full(ks.dim, 3.0), 0.25, 1.75) == pytest.approx(4.5, rel=1e-14)

    def test_unit_hat(self):
        ks = make_knot_set(2, 1.0, [0.5])
        assert integrate_spline(ks, [0, 1, 0], 0.0, 1.0) == pytest.approx(0.5, rel=1e-15)

    def test_reversed_bounds(self):
        ks = make_knot_set(2, 1.0, [0.5])
        with pytest.raises(ValueError):
            integrate_spline(ks, [0, 1, 0], 0.6, 0.4)

    def test_additivity(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            ks = random_knots(rng, 2.0)
            theta = rng.normal(size=ks.dim)
            cuts = np.sort(np.concatenate([[0.0, 2.0], rng.uniform(0, 2.0, 5)]))
            pieces = sum(integrate_spline(ks, theta, a, b) for a, b in zip(cuts[:-1], cuts[1:]))
            total = integrate_spline(ks, theta, 0.0, 2.0)
            assert pieces == pytest.approx(total, rel=1e-12, abs=1e-13)

    def test_against_adaptive_quadrature(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            ks = random_knots(rng, 3.0)
            theta = rng.uniform(0.5, 4.0, ks.dim)
            a, b = np.sort(rng.uniform(0, 3.0, 2))
            exact = integrate_spline(ks, theta, a, b)
            ref, _ = quad(lambda t: eval_spline(ks, theta, t), a, b, points=ks.inner, epsabs=0, epsrel=1e-13, limit=200)
            assert exact == pytest.approx(ref, rel=1e-9, abs=1e-14)

    def test_bin_matrix_rows_sum_to_total(self):
        ks = make_knot_set(4, 24.0, [2.0, 9.5, 13.0])
        A = bin_integral_matrix(ks, np.linspace(0, 24, 49))
        whole = bin_integral_matrix(ks, [0.0, 24.0])[0]
        np.testing.assert_allclose(A.sum(axis=0), whole, rtol=1e-12)


class TestInnerProducts:
    def test_single_interval(self):
        ks = make_knot_set(4, 1.0, [])
        for m in range(4):
            w = basis_inner_products(ks, m)
            assert np.all(w > 0)
            assert w.sum() == pytest.approx(1.0)

    def test_symmetric_hat(self):
        w = basis_inner_products(make_knot_set(2, 1.0, [0.5]), 1)
        assert w[0] == pytest.approx(w[2], rel=1e-14)
        # int B_1 B_0 = 1/12, int B_1^2 = 1/3 for hats of half-width 1/2
        np.testing.assert_allclose(w, np.array([1 / 12, 1 / 3, 1 / 12]) / 0.5)

    def test_disjoint_support(self):
        ks = make_knot_set(3, 1.0, np.linspace(0.1, 0.9, 7))
        for m in range(ks.dim):
            w = basis_inner_products(ks, m)
            far = np.abs(np.arange(ks.dim) - m) >= ks.order
            assert np.all(w[far] == 0)

    def test_against_quadrature_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            ks = random_knots(rng, 1.0)
            m = int(rng.integers(ks.dim))
            spl = [BSpline.basis_element(ks.full[i : i + ks.order + 1], extrapolate=False) for i in range(ks.dim)]

            def prod(t, i):
                return np.nan_to_num(spl[m](t)) * np.nan_to_num(spl[i](t))

            raw = np.array(
                [quad(prod, 0, 1, args=(i,), points=ks.inner, epsabs=1e-15, limit=200)[0] for i in range(ks.dim)]
            )
            np.testing.assert_allclose(basis_inner_products(ks, m), raw / raw.sum(), atol=1e-10)

    def test_index_error(self):
        with pytest.raises(IndexError):
            basis_inner_products(make_knot_set(2, 1.0, []), 2)


@settings(max_examples=200, deadline=None)
@given(
    q=st.integers(2, 5),
    inner=st.lists(st.floats(0.01, 0.99), max_size=8, unique=True),
    t=st.floats(0.0, 1.0),
)
def test_partition_of_unity_property(q, inner, t):
    ks = make_knot_set(q, 1.0, sorted(inner))
    v = eval_basis(ks, t).values
    assert abs(v.sum() - 1.0) <= 1e-12
    assert np.count_nonzero(v) <= q
