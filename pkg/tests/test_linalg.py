import numpy as np
import pytest
from numpy.testing import assert_allclose

from riversep import errors
from riversep.linalg import (
    center_scale,
    correlation_matrix,
    covariance_matrix,
    svd,
    sym_eigen,
)


def brute_force_covariance(x):
    """Textbook double-loop sample covariance, used as an oracle."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    means = [sum(x[:, j]) / n for j in range(p)]
    c = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            acc = 0.0
            for t in range(n):
                acc += (x[t, i] - means[i]) * (x[t, j] - means[j])
            c[i, j] = acc / (n - 1)
    return c


class TestCenterScale:
    def test_two_point_column(self):
        # mean 2, sample sd sqrt(2) under the n-1 convention
        out = center_scale([[1.0], [3.0]], center=True, scale=True)
        assert_allclose(out[:, 0], [-1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-15)

    def test_center_only_leaves_scale(self):
        out = center_scale([[1.0, 10.0], [3.0, 30.0]], center=True, scale=False)
        assert_allclose(out, [[-1.0, -10.0], [1.0, 10.0]])

    def test_no_op(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert_allclose(center_scale(x, center=False, scale=False), x)

    def test_constant_column_raises_on_scale(self):
        with pytest.raises(errors.ZeroVarianceColumn) as exc:
            center_scale([[5.0], [5.0]], scale=True)
        assert exc.value.col == 0

    def test_nearly_constant_column_raises(self):
        # equal up to representation error; must still be flagged
        col = [0.1, 0.1, 0.1]
        with pytest.raises(errors.ZeroVarianceColumn):
            center_scale(np.array([col]).T, scale=True)

    def test_scaled_columns_have_unit_variance(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(40, 5)) * [1, 10, 100, 0.1, 3] + [0, 5, -2, 1, 9]
        out = center_scale(x, center=True, scale=True)
        assert_allclose(out.std(axis=0, ddof=1), np.ones(5), atol=1e-12)
        assert_allclose(out.mean(axis=0), np.zeros(5), atol=1e-12)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            center_scale([[1.0], [np.nan]])


class TestCovariance:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        x = rng.normal(size=(9, 4)) * 3 + 1
        assert_allclose(covariance_matrix(x), brute_force_covariance(x), atol=1e-12)

    def test_identical_columns(self):
        x = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert_allclose(covariance_matrix(x), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_constant_column_gives_zero_row(self):
        x = np.array([[1.0, 2.0], [1.0, 4.0], [1.0, 9.0]])
        c = covariance_matrix(x)
        assert_allclose(c[0, :], [0.0, 0.0], atol=1e-15)

    def test_symmetry_and_psd(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(20, 6))
        c = covariance_matrix(x)
        assert_allclose(c, c.T, atol=0)
        values, _ = sym_eigen(c)
        assert values.min() > -1e-9

    def test_too_few_rows(self):
        with pytest.raises(errors.TooFewRows):
            covariance_matrix([[1.0, 2.0]])


class TestCorrelation:
    def test_perfectly_anticorrelated(self):
        x = np.array([[1.0, -1.0], [2.0, -2.0], [3.0, -3.0]])
        r = correlation_matrix(x)
        assert_allclose(r, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-12)

    def test_equals_covariance_of_standardized(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(15, 4)) * [2, 5, 0.3, 1]
        r = correlation_matrix(x)
        oracle = covariance_matrix(center_scale(x, center=True, scale=True))
        assert_allclose(r, oracle, atol=1e-12)

    def test_unit_diagonal_and_bounds(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(30, 7))
        r = correlation_matrix(x)
        assert_allclose(np.diag(r), np.ones(7), atol=1e-12)
        assert np.all(r <= 1.0) and np.all(r >= -1.0)

    def test_zero_variance_column(self):
        with pytest.raises(errors.ZeroVarianceColumn) as exc:
            correlation_matrix([[1.0, 2.0], [1.0, 3.0]])
        assert exc.value.col == 0


class TestSymEigen:
    def test_identity(self):
        values, vectors = sym_eigen(np.eye(3))
        assert_allclose(values, [1.0, 1.0, 1.0], atol=0)
        assert_allclose(vectors, np.eye(3), atol=0)

    def test_diagonal_sorted_descending(self):
        values, vectors = sym_eigen(np.diag([1.0, 3.0, 2.0]))
        assert_allclose(values, [3.0, 2.0, 1.0], atol=0)
        # eigenvector for 3.0 is the second axis, oriented positive
        assert_allclose(vectors[:, 0], [0.0, 1.0, 0.0], atol=0)

    def test_known_2x2(self):
        # eigenvalues of [[2,1],[1,2]] are 3 and 1
        values, vectors = sym_eigen([[2.0, 1.0], [1.0, 2.0]])
        assert_allclose(values, [3.0, 1.0], atol=1e-12)
        assert_allclose(np.abs(vectors[:, 0]), [1, 1] / np.sqrt(2), atol=1e-12)

    def test_residual_trace_orthonormal(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(8, 8))
        s = (a + a.T) / 2
        values, vectors = sym_eigen(s)
        scale = max(1.0, np.abs(s).max())
        resid = s @ vectors - vectors * values
        assert np.abs(resid).max() <= 1e-8 * scale
        assert abs(values.sum() - np.trace(s)) <= 1e-8 * scale
        assert_allclose(vectors.T @ vectors, np.eye(8), atol=1e-10)

    def test_matches_lapack_eigenvalues(self):
        rng = np.random.default_rng(9)
        for n in (2, 5, 13):
            a = rng.normal(size=(n, n))
            s = (a + a.T) / 2
            values, _ = sym_eigen(s)
            oracle = np.linalg.eigvalsh(s)[::-1]
            assert_allclose(values, oracle, atol=1e-10)

    def test_repeated_eigenvalues_still_diagonalize(self):
        # rotate diag(2, 1, 1) into a dense matrix with a repeated eigenvalue
        rng = np.random.default_rng(10)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        s = q @ np.diag([2.0, 1.0, 1.0]) @ q.T
        s = (s + s.T) / 2
        values, vectors = sym_eigen(s)
        assert_allclose(values, [2.0, 1.0, 1.0], atol=1e-10)
        resid = s @ vectors - vectors * values
        assert np.abs(resid).max() < 1e-9

    def test_sign_convention(self):
        values, vectors = sym_eigen([[2.0, 1.0], [1.0, 2.0]])
        for j in range(2):
            col = vectors[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_bit_identical_reruns(self):
        rng = np.random.default_rng(21)
        a = rng.normal(size=(9, 9))
        s = (a + a.T) / 2
        first = sym_eigen(s)
        second = sym_eigen(s)
        assert np.array_equal(first.values, second.values)
        assert np.array_equal(first.vectors, second.vectors)

    def test_not_symmetric(self):
        with pytest.raises(errors.NotSymmetric):
            sym_eigen([[1.0, 2.0], [0.0, 1.0]])

    def test_rejects_rectangular(self):
        with pytest.raises(errors.NotSymmetric):
            sym_eigen(np.ones((2, 3)))

    def test_scale_invariance_of_threshold(self):
        # a matrix with huge entries must still converge
        rng = np.random.default_rng(13)
        a = rng.normal(size=(6, 6)) * 1e8
        s = (a + a.T) / 2
        values, vectors = sym_eigen(s)
        resid = s @ vectors - vectors * values
        assert np.abs(resid).max() <= 1e-8 * np.abs(s).max()


class TestSvd:
    def test_identity(self):
        u, sigma, v = svd(np.eye(2))
        assert_allclose(sigma, [1.0, 1.0], atol=0)
        assert_allclose(u @ np.diag(sigma) @ v.T, np.eye(2), atol=1e-12)

    def test_rank_deficient_known(self):
        u, sigma, v = svd([[3.0, 0.0], [0.0, 0.0]])
        assert_allclose(sigma, [3.0, 0.0], atol=1e-12)
        assert_allclose(u.T @ u, np.eye(2), atol=1e-12)
        assert_allclose(v.T @ v, np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("shape", [(6, 3), (3, 6), (10, 10), (50, 20), (20, 50)])
    def test_reconstruction_random(self, shape):
        rng = np.random.default_rng(sum(shape))
        a = rng.normal(size=shape)
        u, sigma, v = svd(a)
        recon = u @ np.diag(sigma) @ v.T
        assert np.abs(recon - a).max() <= 1e-8 * np.abs(a).max()
        r = min(shape)
        assert_allclose(u.T @ u, np.eye(r), atol=1e-8)
        assert_allclose(v.T @ v, np.eye(r), atol=1e-8)
        assert np.all(np.diff(sigma) <= 1e-12)

    def test_sigma_squared_matches_gram_eigenvalues(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(12, 4))
        _, sigma, _ = svd(a)
        gram_values, _ = sym_eigen(a.T @ a)
        assert_allclose(sigma**2, gram_values, rtol=1e-8, atol=1e-10)

    def test_rank_one_tall(self):
        a = np.outer([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0])
        u, sigma, v = svd(a)
        assert sigma[0] > 0
        assert_allclose(sigma[1:], [0.0, 0.0], atol=1e-10)
        assert_allclose(u @ np.diag(sigma) @ v.T, a, atol=1e-10)
        assert_allclose(u.T @ u, np.eye(3), atol=1e-10)

    def test_matches_lapack_singular_values(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(9, 5))
        _, sigma, _ = svd(a)
        assert_allclose(sigma, np.linalg.svd(a, compute_uv=False), atol=1e-10)
