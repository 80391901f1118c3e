import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tolsketch.sketching import (
    GaussianSketch,
    SampleSet,
    SketchConfig,
    apply_sample,
    default_gaussian_rows,
    gaussian_apply,
    hadamard_apply,
    hadamard_rows,
    next_pow2,
    sample_rows,
    srht_sample_count,
    srht_solve,
    validate_distribution,
)
from tolsketch.toeplitz import make_system, materialize


def sylvester(n):
    H = np.array([[1.0]])
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H / math.sqrt(n)


class TestSampling:
    def test_weights(self):
        pi = np.array([0.1, 0.2, 0.3, 0.4])
        s = sample_rows(pi, 50, seed=1)
        np.testing.assert_allclose(s.weights, 1 / np.sqrt(50 * pi[s.indices]))
        assert s.c == 50 and s.source_rows == 4

    def test_zero_probability_never_drawn(self):
        pi = np.array([0.0, 0.5, 0.0, 0.5, 0.0])
        s = sample_rows(pi, 5000, seed=2)
        assert set(np.unique(s.indices)) <= {1, 3}

    def test_frequencies(self):
        pi = np.array([0.1, 0.6, 0.3])
        s = sample_rows(pi, 60_000, seed=3)
        freq = np.bincount(s.indices, minlength=3) / 60_000
        np.testing.assert_allclose(freq, pi, atol=0.01)

    def test_deterministic(self):
        pi = np.full(10, 0.1)
        a, b = sample_rows(pi, 20, seed=9), sample_rows(pi, 20, seed=9)
        np.testing.assert_array_equal(a.indices, b.indices)

    def test_rejects_bad_distributions(self):
        with pytest.raises(ValueError):
            validate_distribution([0.5, 0.6])
        with pytest.raises(ValueError):
            validate_distribution([-0.1, 1.1])
        with pytest.raises(ValueError):
            sample_rows([1.0], 0)

    def test_unbiased_gram(self, rng):
        # E[(SA)^T (SA)] = A^T A for the rescaled sampler
        A = rng.standard_normal((40, 3))
        pi = np.einsum("ij,ij->i", A, A)
        pi /= pi.sum()
        acc = np.zeros((3, 3))
        reps = 3000
        for k in range(reps):
            SA, _ = apply_sample(A, np.zeros(40), sample_rows(pi, 10, seed=k))
            acc += SA.T @ SA
        np.testing.assert_allclose(acc / reps, A.T @ A, rtol=0.1, atol=0.5)

    def test_apply_to_toeplitz(self, rng):
        y = rng.standard_normal(30)
        sys = make_system(y, 4)
        A, b = materialize(sys)
        s = SampleSet(np.array([0, 3, 25]), np.array([1.0, 2.0, 3.0]), sys.m)
        SA, Sb = apply_sample(sys, None, s)
        np.testing.assert_array_equal(SA, A[[0, 3, 25]] * np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_array_equal(Sb, b[[0, 3, 25]] * np.array([1.0, 2.0, 3.0]))

    def test_out_of_range(self):
        s = SampleSet(np.array([5]), np.array([1.0]), 5)
        with pytest.raises(IndexError):
            apply_sample(np.ones((5, 1)), np.ones(5), s)

    def test_to_csv(self, tmp_path):
        s = SampleSet(np.array([2, 0]), np.array([0.5, 1.5]), 3)
        s.to_csv(tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text() == "index,weight\n2,0.5\n0,1.5\n"

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SketchConfig(epsilon=1.0)
        with pytest.raises(ValueError):
            SketchConfig(c_override=0)


class TestHadamard:
    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_matches_sylvester(self, n, rng):
        x = rng.standard_normal(n)
        np.testing.assert_allclose(hadamard_apply(x), sylvester(n) @ x, atol=1e-14)

    def test_size_one(self):
        np.testing.assert_array_equal(hadamard_apply([3.0]), [3.0])

    def test_matrix_columns(self, rng):
        X = rng.standard_normal((32, 3))
        np.testing.assert_allclose(hadamard_apply(X), sylvester(32) @ X, atol=1e-13)

    def test_involution_and_norm(self, rng):
        x = rng.standard_normal(1 << 12)
        hx = hadamard_apply(x)
        assert np.linalg.norm(hx) == pytest.approx(np.linalg.norm(x), rel=1e-12)
        np.testing.assert_allclose(hadamard_apply(hx), x, atol=1e-12)

    def test_rejects_non_power(self):
        with pytest.raises(ValueError):
            hadamard_apply(np.ones(6))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10), st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_rows_match_full(self, log_n, r, seed):
        n = 1 << log_n
        g = np.random.default_rng(seed)
        X = g.standard_normal((n, 2))
        rows = g.integers(0, n, size=r)
        np.testing.assert_allclose(hadamard_rows(X, rows), hadamard_apply(X)[rows], atol=1e-12)

    def test_next_pow2(self):
        assert [next_pow2(v) for v in (1, 2, 3, 5, 1024, 1025)] == [1, 2, 4, 8, 1024, 2048]


class TestSRHT:
    def test_count_capped(self):
        with pytest.warns(RuntimeWarning):
            res = srht_sample_count(2**20, 10, 0.5)
        assert res.capped and res.c == 2**20
        assert res.requested == 6_633_579

    def test_count_uncapped(self):
        res = srht_sample_count(10**9, 10, 0.5)
        assert res == (9_108_365, False, 9_108_365)

    def test_count_validation(self):
        with pytest.raises(ValueError):
            srht_sample_count(5, 10, 0.5)

    def test_full_sample_is_nearly_exact(self, rng):
        A = rng.standard_normal((500, 4))
        phi = np.array([1.0, -2.0, 0.5, 3.0])
        b = A @ phi
        sol = srht_solve(A, b, 200, seed=1)
        np.testing.assert_allclose(sol.coefficients, phi, atol=1e-9)

    def test_noisy_accuracy(self, rng):
        A = rng.standard_normal((4000, 5))
        b = A @ np.ones(5) + 0.1 * rng.standard_normal(4000)
        exact = np.linalg.lstsq(A, b, rcond=None)[0]
        sol = srht_solve(A, b, 1000, seed=2)
        assert np.linalg.norm(sol.coefficients - exact) < 0.05

    def test_too_few_samples(self, rng):
        with pytest.raises(ValueError):
            srht_solve(rng.standard_normal((10, 4)), np.ones(10), 3)


class TestGaussian:
    def test_rows(self):
        assert default_gaussian_rows(1000) == math.ceil(8 * math.log(1000))

    def test_reproducible(self, rng):
        M = rng.standard_normal((20, 3))
        sk = GaussianSketch(5, seed=3)
        np.testing.assert_array_equal(gaussian_apply(sk, M), gaussian_apply(sk, M))
        assert gaussian_apply(sk, M).shape == (5, 3)

    def test_norm_preserved_in_expectation(self, rng):
        v = rng.standard_normal(50)
        sq = [np.sum(gaussian_apply(GaussianSketch(4, seed=s), v) ** 2) / 4 for s in range(4000)]
        assert np.mean(sq) == pytest.approx(v @ v, rel=0.05)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            GaussianSketch(0)
