import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from causal_bench.errors import DegenerateInputError, ParameterError
from causal_bench.kernels import (
    hsic_statistic,
    hsic_test,
    kfold_indices,
    krr_fit,
    krr_oof_predict,
    krr_predict,
    median_heuristic,
    rbf_gram,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestRbfGram:
    def test_unit_diagonal(self, rng):
        a = rng.standard_normal((20, 3))
        np.testing.assert_allclose(np.diag(rbf_gram(a, None, 0.7)), 1.0)

    def test_plug_in_value(self):
        bw = 1.3
        a = np.array([[0.0, 0.0]])
        b = np.array([[np.sqrt(2) * bw, 0.0]])
        assert rbf_gram(a, b, bw)[0, 0] == pytest.approx(np.exp(-1))

    def test_infinite_bandwidth_limit(self, rng):
        a = rng.standard_normal((5, 2))
        np.testing.assert_allclose(rbf_gram(a, None, 1e8), 1.0, atol=1e-12)
        np.testing.assert_array_equal(rbf_gram(a, None, np.inf), 1.0)

    def test_bad_bandwidth(self):
        with pytest.raises(ParameterError):
            rbf_gram(np.zeros((2, 1)), None, 0.0)

    @given(arrays(float, (50, 2), elements=finite), st.floats(0.1, 5))
    def test_symmetric_psd(self, a, bw):
        k = rbf_gram(a, None, bw)
        np.testing.assert_allclose(k, k.T)
        assert np.linalg.eigvalsh(k).min() >= -1e-8


class TestMedianHeuristic:
    def test_two_points(self):
        assert median_heuristic(np.array([[0.0], [3.0]])) == pytest.approx(3.0)

    def test_duplicates(self):
        assert median_heuristic(np.array([0.0, 0.0, 1.0])) == pytest.approx(1.0)

    def test_zero_median_fallback(self):
        x = np.array([0.0, 0.0, 0.0, 0.0, 2.0])
        assert median_heuristic(x) == pytest.approx(2.0)

    def test_all_identical(self):
        with pytest.raises(DegenerateInputError):
            median_heuristic(np.ones((5, 2)))

    @given(arrays(float, (30, 2), elements=finite), st.floats(0.01, 100))
    def test_homogeneous(self, x, c):
        try:
            base = median_heuristic(x)
        except DegenerateInputError:
            return
        assert median_heuristic(c * x) == pytest.approx(c * base, rel=1e-9)

    def test_subsample_cap_is_deterministic(self, rng):
        x = rng.standard_normal((3000, 2))
        assert median_heuristic(x) == median_heuristic(x.copy())


class TestKernelRidge:
    def test_solves_system(self, rng):
        x = rng.standard_normal((40, 2))
        y = rng.standard_normal(40)
        m = krr_fit(x, y, 1.0, 1e-3)
        k = rbf_gram(x, None, 1.0)
        assert m.intercept == pytest.approx(y.mean())
        resid = (k + 1e-3 * np.eye(40)) @ m.dual_coefficients - (y - m.intercept)
        assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(y)

    def test_constant_target(self, rng):
        x = rng.uniform(0, 1, (50, 1))
        m = krr_fit(x, np.full(50, 2.5), None, 1e-3)
        np.testing.assert_allclose(krr_predict(m, x), 2.5, atol=1e-6)

    def test_identity_target(self):
        x = np.linspace(0, 1, 100)
        m = krr_fit(x, x, None, 1e-3)
        assert np.sqrt(np.mean((m.predict(x) - x) ** 2)) < 0.05

    def test_interpolation_limit(self, rng):
        x = rng.standard_normal((15, 1))
        y = np.sin(3 * x[:, 0])
        m = krr_fit(x, y, 0.5, 1e-10)
        np.testing.assert_allclose(m.predict(x[:3]), y[:3], atol=1e-4)

    def test_row_order_invariance(self, rng):
        x = rng.standard_normal((60, 2))
        y = x[:, 0] ** 2
        p = rng.permutation(60)
        xt = rng.standard_normal((10, 2))
        a = krr_fit(x, y, 1.0).predict(xt)
        b = krr_fit(x[p], y[p], 1.0).predict(xt)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_bad_ridge(self):
        with pytest.raises(ParameterError):
            krr_fit(np.zeros((3, 1)), np.zeros(3), 1.0, 0.0)

    def test_folds_partition(self):
        folds = kfold_indices(23, 5)
        assert sorted(np.concatenate(folds).tolist()) == list(range(23))
        with pytest.raises(ParameterError):
            kfold_indices(10, 1)

    def test_oof_never_sees_own_label(self, rng):
        # a spike in one label must not leak into that row's own prediction
        x = rng.standard_normal((50, 1))
        y = np.zeros(50)
        y[7] = 1e6
        pred = krr_oof_predict(x, y, 5, 1e-3)
        own_fold = kfold_indices(50, 5)[0]
        assert 7 in own_fold
        assert np.all(np.abs(pred[own_fold]) < 1e-6)


class TestHsic:
    def test_identical_is_dependent(self, rng):
        x = rng.standard_normal(200)
        assert hsic_test(x, x).p_value < 0.01

    def test_calibration(self):
        rejections = 0
        for s in range(200):
            r = np.random.default_rng(s)
            rejections += hsic_test(r.standard_normal(200), r.standard_normal(200)).p_value < 0.05
        assert 0.01 <= rejections / 200 <= 0.12

    def test_joint_permutation_invariance(self, rng):
        x = rng.standard_normal(80)
        y = x**2 + rng.standard_normal(80)
        p = rng.permutation(80)
        assert hsic_statistic(x, y) == pytest.approx(hsic_statistic(x[p], y[p]), rel=1e-9)

    def test_constant_input(self, rng):
        with pytest.raises(DegenerateInputError):
            hsic_test(np.ones(30), rng.standard_normal(30))

    def test_too_few_samples(self, rng):
        with pytest.raises(ParameterError):
            hsic_test(rng.standard_normal(10), rng.standard_normal(10))

    def test_shrinks_with_sample_size(self):
        small = np.median([hsic_statistic(*np.random.default_rng(s).standard_normal((2, 100))) for s in range(10)])
        large = np.median([hsic_statistic(*np.random.default_rng(s).standard_normal((2, 800))) for s in range(10)])
        assert large < small

    def test_permutation_fallback(self, rng):
        x = rng.standard_normal(60)
        dep = hsic_test(x, np.sin(2 * x), np.random.default_rng(0), permutations=200)
        ind = hsic_test(x, rng.standard_normal(60), np.random.default_rng(0), permutations=200)
        assert dep.p_value < 0.05 < ind.p_value

    @given(st.integers(0, 10_000))
    def test_result_ranges(self, seed):
        r = np.random.default_rng(seed)
        res = hsic_test(r.standard_normal(30), r.standard_normal(30))
        assert res.statistic >= 0 and 0 <= res.p_value <= 1
