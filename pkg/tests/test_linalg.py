"""Spectral primitive contracts: thin_svd, soft_threshold, tail_sum, tsvt."""

import numpy as np
import pytest

from hetpca.linalg import (
    soft_threshold,
    spectral_norm,
    tail_sum,
    thin_svd,
    tsvt,
    tsvt_with_values,
)


def random_matrix(rng, d=5, n=4):
    return rng.standard_normal((d, n))


class TestThinSvd:
    def test_diagonal(self):
        dec = thin_svd(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(dec.singular_values, [3, 2, 1])

    def test_zero_matrix(self):
        dec = thin_svd(np.zeros((4, 3)))
        assert np.allclose(dec.singular_values, 0.0)
        assert dec.singular_values.shape == (3,)

    def test_rank_one_outer_product(self):
        u = np.array([1.0, 0, 0, 0])
        v = np.array([0.0, 1, 0])
        dec = thin_svd(np.outer(u, v))
        assert abs(dec.singular_values[0] - 1.0) < 1e-12
        assert np.all(dec.singular_values[1:] < 1e-12)

    def test_invariants_random(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            a = random_matrix(rng, 6, 5)
            dec = thin_svd(a)
            s = dec.singular_values
            assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
            eye = np.eye(s.size)
            assert np.max(np.abs(dec.left_vectors.T @ dec.left_vectors - eye)) < 1e-10
            assert np.max(np.abs(dec.right_vectors.T @ dec.right_vectors - eye)) < 1e-10
            recon = (dec.left_vectors * s) @ dec.right_vectors.T
            assert np.linalg.norm(recon - a) <= 1e-10 * np.linalg.norm(a)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            thin_svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestSoftThreshold:
    def test_direct_formula(self):
        assert np.allclose(soft_threshold(np.array([3.0, 0.5, -2.0]), 1.0), [2, 0, -1])

    def test_zero_threshold_identity(self):
        x = np.array([1.5, -0.2, 0.0, 4.0])
        assert np.array_equal(soft_threshold(x, 0.0), x)

    def test_all_clipped(self):
        assert np.array_equal(soft_threshold(np.ones(3), 5.0), np.zeros(3))

    def test_magnitudes_never_grow(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(50)
        assert np.all(np.abs(soft_threshold(x, 0.3)) <= np.abs(x))

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(np.ones(2), -0.1)


class TestTailSum:
    def test_diagonal_nuclear(self):
        assert tail_sum(np.diag([3.0, 2.0, 1.0]), 0) == pytest.approx(6.0, abs=1e-12)

    def test_diagonal_tail(self):
        assert tail_sum(np.diag([3.0, 2.0, 1.0]), 1) == pytest.approx(3.0, abs=1e-12)

    def test_no_tail(self):
        assert tail_sum(np.diag([3.0, 2.0, 1.0]), 3) == 0.0

    def test_beyond_min_dim_clamps(self):
        assert tail_sum(np.ones((2, 3)), 10) == 0.0

    def test_matches_nuclear_norm_random(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a = random_matrix(rng, 5, 4)
            nuclear = float(np.sum(np.linalg.svd(a, compute_uv=False)))
            assert abs(tail_sum(a, 0) - nuclear) < 1e-10


class TestTsvt:
    def test_diagonal_example(self):
        out = tsvt(np.diag([3.0, 2.0, 1.0]), 1.5, 1)
        assert np.allclose(np.sort(np.linalg.svd(out, compute_uv=False))[::-1], [3.0, 0.5, 0.0],
                           atol=1e-12)

    def test_zero_threshold_is_identity(self):
        rng = np.random.default_rng(3)
        a = random_matrix(rng)
        assert tsvt(a, 0.0, 1) is a or np.array_equal(tsvt(a, 0.0, 1), a)

    def test_protected_rank_covers_everything(self):
        rng = np.random.default_rng(4)
        a = random_matrix(rng, 4, 6)
        out = tsvt(a, 2.5, 4)  # k = min(D, N): empty tail
        assert np.array_equal(out, a)

    def test_k_at_least_rank_preserves(self):
        rng = np.random.default_rng(5)
        # rank-2 matrix, k=2 < min(D,N)=4: tail exists but is zero
        a = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
        out = tsvt(a, 3.0, 2)
        assert np.linalg.norm(out - a) <= 1e-9 * np.linalg.norm(a)

    def test_singular_value_formula(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            a = random_matrix(rng, 6, 5)
            s = np.linalg.svd(a, compute_uv=False)
            for k in (0, 1, 2):
                for tau in (0.1, 0.7, 2.0):
                    out_s = np.linalg.svd(tsvt(a, tau, k), compute_uv=False)
                    expect = s.copy()
                    expect[k:] = np.maximum(expect[k:] - tau, 0.0)
                    assert np.max(np.abs(out_s - expect)) < 1e-9

    def test_with_values_returns_output_values(self):
        rng = np.random.default_rng(13)
        a = random_matrix(rng, 6, 5)
        out, values = tsvt_with_values(a, 0.7, 1)
        assert values is not None
        assert np.allclose(np.linalg.svd(out, compute_uv=False), values, atol=1e-10)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            tsvt(np.eye(3), -1.0, 0)


def prox_objective(x, a, tau, k):
    """tau * tail_sum(x, k) + 0.5 ||x - a||_F^2 (batched over leading axis)."""
    s = np.linalg.svd(x, compute_uv=False)
    tail = np.sum(s[..., k:], axis=-1)
    quad = 0.5 * np.sum((x - a) ** 2, axis=(-2, -1))
    return tau * tail + quad


class TestProxSamplingOracle:
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_local_optimality(self, k):
        rng = np.random.default_rng(100 + k)
        tau = 0.7
        for _ in range(10):
            a = random_matrix(rng, 6, 5)
            x_star = tsvt(a, tau, k)
            base = prox_objective(x_star, a, tau, k)
            assert base <= prox_objective(a, a, tau, k) + 1e-12
            assert base <= prox_objective(np.zeros_like(a), a, tau, k) + 1e-12
            perturbs = x_star[None, :, :] + 1e-3 * rng.standard_normal((200, 6, 5))
            values = prox_objective(perturbs, a[None, :, :], tau, k)
            assert np.all(base <= values + 1e-12)


class TestSpectralNorm:
    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 2.0, 1.0])) == pytest.approx(3.0)

    def test_identity(self):
        assert spectral_norm(np.eye(4)) == pytest.approx(1.0)

    def test_scaled_orthonormal(self):
        q = np.linalg.qr(np.random.default_rng(1).standard_normal((4, 4)))[0]
        assert spectral_norm(2.0 * q) == pytest.approx(2.0, abs=1e-12)
