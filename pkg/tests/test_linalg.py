import numpy as np
import pytest

from sparselift.linalg import (
    MatrixNorms,
    inner,
    norms,
    psd_project,
    soft_threshold,
    sym_eigen,
    symmetrize,
)


def random_symmetric(n, seed):
    gen = np.random.default_rng(seed)
    A = gen.standard_normal((n, n))
    return 0.5 * (A + A.T)


def charpoly_coeffs(A):
    """Independent eigenvalue oracle ingredient: coefficients of det(tI - A)
    as [1, c1, ..., cn] by the Faddeev-LeVerrier trace recursion. Roots of
    this polynomial share no code path with sym_eigen."""
    n = A.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    for k in range(1, n + 1):
        M = A @ M + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


class TestSymEigen:
    def test_2x2_closed_form(self):
        spec = sym_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(spec.eigenvalues, [1.0, -1.0], atol=1e-14)
        expected_plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
        expected_minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
        for col, expected in zip(spec.eigenvectors.T, (expected_plus, expected_minus)):
            assert min(
                np.linalg.norm(col - expected), np.linalg.norm(col + expected)
            ) < 1e-12

    def test_identity(self):
        spec = sym_eigen(np.eye(3))
        assert np.allclose(spec.eigenvalues, [1.0, 1.0, 1.0], atol=0)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_matches_charpoly_oracle(self, seed):
        A = random_symmetric(6, seed)
        roots = np.sort(np.roots(charpoly_coeffs(A)).real)[::-1]
        spec = sym_eigen(A)
        assert np.max(np.abs(spec.eigenvalues - roots)) < 1e-8

    @pytest.mark.parametrize("seed", range(8))
    def test_spectrum_invariants(self, seed):
        n = int(np.random.default_rng(seed).integers(2, 30))
        A = random_symmetric(n, seed + 100)
        spec = sym_eigen(A)
        assert np.all(np.diff(spec.eigenvalues) <= 0)
        Q = spec.eigenvectors
        assert np.abs(Q.T @ Q - np.eye(n)).max() <= 1e-10
        scale = max(1.0, np.linalg.norm(A))
        assert np.linalg.norm(spec.reconstruct() - A) <= 1e-9 * scale

    def test_deterministic(self):
        A = random_symmetric(12, 7)
        s1 = sym_eigen(A)
        s2 = sym_eigen(A.copy())
        assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
        assert np.array_equal(s1.eigenvectors, s2.eigenvectors)

    def test_sign_convention(self):
        for seed in range(5):
            spec = sym_eigen(random_symmetric(9, seed))
            for col in spec.eigenvectors.T:
                assert col[np.argmax(np.abs(col))] > 0

    def test_diag_sorted_descending(self):
        spec = sym_eigen(np.diag([3.0, -1.0, 7.0, 0.5]))
        assert np.allclose(spec.eigenvalues, [7.0, 3.0, 0.5, -1.0], atol=0)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            sym_eigen(np.zeros((2, 3)))


class TestPsdProject:
    def test_clamps_negative(self):
        assert np.allclose(psd_project(np.diag([1.0, -2.0])), np.diag([1.0, 0.0]), atol=1e-14)

    def test_psd_fixed_point(self):
        gen = np.random.default_rng(3)
        B = gen.standard_normal((6, 6))
        X = B @ B.T
        assert np.linalg.norm(psd_project(X) - X) <= 1e-9

    def test_projection_distance(self):
        X = np.diag([3.0, -1.0, -4.0])
        assert abs(np.linalg.norm(psd_project(X) - X) - np.sqrt(17.0)) < 1e-12

    @pytest.mark.parametrize("seed", range(6))
    def test_idempotent_and_psd(self, seed):
        X = random_symmetric(10, seed)
        P = psd_project(X)
        assert np.linalg.eigvalsh(P).min() >= -1e-10
        assert np.linalg.norm(psd_project(P) - P) <= 1e-9


class TestSoftThreshold:
    def test_tau_zero_identity(self):
        X = random_symmetric(5, 0)
        assert np.array_equal(soft_threshold(X, 0.0), X)

    def test_small_entry_to_zero(self):
        assert soft_threshold(np.array([[0.5]]), 1.0)[0, 0] == 0.0

    def test_negative_entry(self):
        assert soft_threshold(np.array([[-2.0]]), 0.5)[0, 0] == -1.5

    def test_preserves_symmetry(self):
        X = random_symmetric(7, 1)
        Y = soft_threshold(X, 0.3)
        assert np.array_equal(Y, Y.T)

    def test_lipschitz_entrywise(self):
        gen = np.random.default_rng(9)
        for _ in range(20):
            X = gen.standard_normal((4, 4))
            Y = gen.standard_normal((4, 4))
            d = np.abs(soft_threshold(X, 0.7) - soft_threshold(Y, 0.7))
            assert np.all(d <= np.abs(X - Y) + 1e-15)

    def test_rejects_negative_tau(self):
        with pytest.raises(ValueError):
            soft_threshold(np.eye(2), -0.1)


class TestNorms:
    def test_rank_one_identities(self):
        gen = np.random.default_rng(4)
        x = gen.standard_normal(6)
        x /= np.linalg.norm(x)
        res = norms(np.outer(x, x))
        assert abs(res.trace - 1.0) < 1e-12
        assert abs(res.spectral - 1.0) < 1e-10
        assert abs(res.entrywise_l1 - np.abs(x).sum() ** 2) < 1e-12

    def test_identity_4(self):
        res = norms(np.eye(4))
        assert res.fro == 2.0
        assert res.entrywise_l1 == 4.0

    def test_entrywise_l1_double_loop_oracle(self):
        X = random_symmetric(5, 11)
        total = 0.0
        for i in range(5):
            for j in range(5):
                total += abs(X[i, j])
        assert abs(norms(X).entrywise_l1 - total) < 1e-12

    def test_returns_record(self):
        assert isinstance(norms(np.eye(2)), MatrixNorms)


class TestInner:
    def test_identity_gives_trace(self):
        X = random_symmetric(6, 2)
        assert abs(inner(np.eye(6), X) - np.trace(X)) < 1e-12

    def test_coordinate_matrix(self):
        X = random_symmetric(4, 5)
        E = np.zeros((4, 4))
        E[0, 0] = 1.0
        assert abs(inner(E, X) - X[0, 0]) < 1e-15

    def test_rank_one_identity(self):
        gen = np.random.default_rng(8)
        x = gen.standard_normal(5)
        y = gen.standard_normal(5)
        assert abs(inner(np.outer(x, x), np.outer(y, y)) - (x @ y) ** 2) < 1e-10

    def test_symmetric_bilinear(self):
        X = random_symmetric(7, 1)
        Y = random_symmetric(7, 2)
        a = inner(X, Y)
        assert abs(a - inner(Y, X)) <= 1e-12 * max(1.0, abs(a))
        assert abs(inner(X, X) - norms(X).fro ** 2) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inner(np.eye(2), np.eye(3))


def test_symmetrize():
    A = np.arange(9.0).reshape(3, 3)
    S = symmetrize(A)
    assert np.array_equal(S, S.T)
    with pytest.raises(ValueError):
        symmetrize(np.zeros(3))
