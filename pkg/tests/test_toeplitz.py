import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tolsketch.errors import CapExceededError, DataError, RankDeficientError
from tolsketch.series import ARModelSpec, simulate_ar
from tolsketch.toeplitz import (
    PACFResult,
    compressed_bound,
    exact_bound,
    exact_fit,
    exact_leverage_scores,
    lstsq,
    make_system,
    materialize,
    relative_error,
    residuals,
    select_order,
    solve_exact,
)


class TestSystem:
    def test_toy_rows(self, toy_series):
        A, b = materialize(make_system(toy_series, 2))
        np.testing.assert_array_equal(A, [[2, 1], [3, 2], [4, 3]])
        np.testing.assert_array_equal(b, [3, 4, 5])

    def test_p1(self, toy_series):
        A, b = materialize(make_system(toy_series, 1))
        np.testing.assert_array_equal(A[:, 0], [1, 2, 3, 4])
        np.testing.assert_array_equal(b, [2, 3, 4, 5])

    def test_shape(self):
        sys = make_system(np.arange(100.0), 7)
        assert sys.shape == (93, 7)
        assert sys.m == 93

    def test_p_too_large(self, toy_series):
        with pytest.raises(DataError):
            make_system(toy_series, 5)
        with pytest.raises(ValueError):
            make_system(toy_series, 0)

    def test_memory_cap(self):
        with pytest.raises(CapExceededError):
            materialize(make_system(np.arange(100.0), 10), cap=100)

    def test_matvec_matches_dense(self, rng):
        y = rng.standard_normal(60)
        sys = make_system(y, 6)
        A, b = materialize(sys)
        phi = rng.standard_normal(6)
        np.testing.assert_allclose(sys.matvec(phi), A @ phi, rtol=1e-13, atol=1e-13)
        r = rng.standard_normal(sys.m)
        np.testing.assert_allclose(sys.rmatvec(r), A.T @ r, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(residuals(sys, phi), A @ phi - b, atol=1e-13)
        idx = np.array([0, 5, 5, 53])
        np.testing.assert_array_equal(sys.rows(idx), A[idx])
        np.testing.assert_array_equal(sys.targets(idx), b[idx])


class TestSolve:
    def test_toy_exact_fit(self, toy_series):
        # 2a + b = 3, 3a + 2b = 4 and 4a + 3b = 5 share the solution (2, -1)
        sol = solve_exact(*materialize(make_system(toy_series, 2)))
        np.testing.assert_allclose(sol.coefficients, [2.0, -1.0], atol=1e-12)
        assert sol.residual_norm < 1e-12
        assert sol.method == "exact-qr"

    def test_matches_numpy(self, rng):
        A = rng.standard_normal((200, 8))
        b = rng.standard_normal(200)
        ref = np.linalg.lstsq(A, b, rcond=None)[0]
        np.testing.assert_allclose(lstsq(A, b).coefficients, ref, rtol=1e-10)

    def test_rank_deficient_falls_back(self, rng):
        A = rng.standard_normal((50, 3))
        A = np.column_stack([A, A[:, 0]])
        b = rng.standard_normal(50)
        sol = lstsq(A, b)
        assert sol.method == "exact-svd"
        assert sol.rank == 3
        np.testing.assert_allclose(sol.coefficients, np.linalg.pinv(A) @ b, rtol=1e-8)

    def test_underdetermined(self):
        with pytest.raises(ValueError):
            solve_exact(np.ones((2, 3)), np.ones(2))
        sol = lstsq(np.array([[1.0, 1.0]]), np.array([2.0]), "compressed")
        np.testing.assert_allclose(sol.coefficients, [1.0, 1.0])
        assert sol.method == "compressed"

    def test_target_mismatch(self):
        with pytest.raises(ValueError):
            lstsq(np.ones((3, 1)), np.ones(2))


class TestLeverage:
    def test_known_matrix(self):
        # single column: l_i = a_i^2 / |a|^2
        np.testing.assert_allclose(exact_leverage_scores(np.array([[1.0], [2.0], [2.0]])),
                                   [1 / 9, 4 / 9, 4 / 9])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 60), st.integers(0, 2**32 - 1))
    def test_invariants(self, d, extra, seed):
        A = np.random.default_rng(seed).standard_normal((d + extra + 1, d))
        lev = exact_leverage_scores(A)
        assert np.all(lev >= -1e-12) and np.all(lev <= 1 + 1e-12)
        assert abs(lev.sum() - d) < 1e-10
        hat = A @ np.linalg.pinv(A)
        np.testing.assert_allclose(lev, np.diag(hat), atol=1e-10)

    def test_rank_deficient(self):
        A = np.ones((5, 2))
        with pytest.raises(RankDeficientError):
            exact_leverage_scores(A)


class TestOrderSelection:
    def test_inclusive_bound(self):
        assert select_order(PACFResult(np.array([0.5, 0.1, 0.2, 0.01]), 0.2, "x")) == 3

    def test_none_significant(self):
        assert select_order(PACFResult(np.array([0.01, -0.02]), 0.2, "x")) == 0

    def test_negative_taus_count(self):
        assert select_order(PACFResult(np.array([0.5, -0.3, 0.0]), 0.2, "x")) == 2

    def test_bounds(self):
        assert compressed_bound(400) == pytest.approx(0.098)
        assert exact_bound(10_050, 50) == pytest.approx(0.0196)

    def test_relative_error(self):
        assert relative_error([1.0, 1.0], [1.0, 0.0]) == pytest.approx(100.0)
        assert relative_error([3.0, 4.0], [3.0, 4.0]) == 0.0
        with pytest.raises(ValueError):
            relative_error([0.0], [0.0])

    @given(arrays(np.float64, 5, elements=st.floats(-10, 10)),
           arrays(np.float64, 5, elements=st.floats(0.5, 10)))
    def test_relative_error_nonnegative(self, a, b):
        assert relative_error(a, b) >= 0


class TestExactFit:
    def test_ar2_recovery(self):
        spec = ARModelSpec([0.6, -0.3])
        y = simulate_ar(spec, 20_000, seed=4)
        fit = exact_fit(y, 10)
        np.testing.assert_allclose(fit.lag_coefficients[1], spec.coefficients, atol=0.03)
        assert fit.p_bar == 10
        assert fit.cumulative_seconds.shape == (10,)
        assert np.all(np.diff(fit.cumulative_seconds) >= 0)
        assert fit.pacf.bound == pytest.approx(1.96 / np.sqrt(20_000 - 10))
        # lag-2 partial autocorrelation of an AR(2) is its last coefficient
        assert fit.pacf.taus[1] == pytest.approx(-0.3, abs=0.03)

    def test_pacf_matches_last_coefficient(self, ar5_series):
        _, y = ar5_series
        fit = exact_fit(y, 8)
        for h in range(1, 9):
            assert fit.pacf.taus[h - 1] == fit.lag_coefficients[h - 1][-1]
            assert fit.lag_coefficients[h - 1].shape == (h,)

    def test_too_short(self):
        with pytest.raises(DataError):
            exact_fit(np.arange(5.0), 4)
