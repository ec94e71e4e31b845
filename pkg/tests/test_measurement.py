import json

import numpy as np
import pytest

from sparselift.measurement import (
    SensingEnsemble,
    SparseSignal,
    SubspaceContext,
    apply_A,
    apply_A_adjoint,
    build_X0,
    ensemble_from_json,
    ensemble_to_json,
    make_ensemble,
    measure,
    measurements_from_json,
    measurements_to_json,
    project_Gamma,
    project_Omega,
    project_T,
    project_T_cap_Omega,
    signal_from_json,
    signal_to_json,
)
from sparselift.linalg import inner


def flat_signal(n, support, signs):
    support = np.asarray(support)
    values = np.asarray(signs, dtype=float) / np.sqrt(len(support))
    return SparseSignal(dim=n, support=support, values=values)


def context(n=5, support=(0, 1), signs=(1, -1)):
    return SubspaceContext.from_signal(flat_signal(n, support, signs))


class TestSparseSignal:
    def test_validation(self):
        with pytest.raises(ValueError):
            SparseSignal(dim=4, support=np.array([0, 0]), values=np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            SparseSignal(dim=4, support=np.array([5]), values=np.array([1.0]))
        with pytest.raises(ValueError):
            SparseSignal(dim=4, support=np.array([1]), values=np.array([0.0]))
        with pytest.raises(ValueError):
            SparseSignal(dim=0, support=np.array([0]), values=np.array([1.0]))

    def test_dense_and_norms(self):
        sig = flat_signal(6, [1, 4], [1, -1])
        x = sig.dense()
        assert x[1] > 0 and x[4] < 0 and np.count_nonzero(x) == 2
        assert sig.is_unit_norm()
        assert abs(sig.norm1() - np.sqrt(2)) < 1e-14

    def test_support_sorted(self):
        sig = SparseSignal(dim=5, support=np.array([3, 1]), values=np.array([2.0, 1.0]))
        assert np.array_equal(sig.support, [1, 3])
        assert np.array_equal(sig.values, [1.0, 2.0])


class TestEnsemble:
    def test_same_seed_identical(self):
        a = make_ensemble(10, 7, 42)
        b = make_ensemble(10, 7, 42)
        assert np.array_equal(a.vectors, b.vectors)

    def test_different_seeds_differ(self):
        a = make_ensemble(10, 7, 42)
        b = make_ensemble(10, 7, 43)
        assert np.any(a.vectors != b.vectors)

    def test_law_of_large_numbers(self):
        e = make_ensemble(50, 2000, 1)
        entries = e.vectors.ravel()
        assert abs(entries.mean()) <= 0.05
        assert abs(entries.var() - 1.0) <= 0.05

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            make_ensemble(0, 5, 1)
        with pytest.raises(ValueError):
            make_ensemble(5, 0, 1)

    def test_gram_factor_reconstruction(self):
        e = make_ensemble(12, 30, 3)
        L = e.gram_cholesky()
        G = e.gram()
        assert np.linalg.norm(L @ L.T - G) <= 1e-8 * np.linalg.norm(G)


class TestMeasure:
    def test_coordinate_signal(self):
        vectors = np.zeros((2, 3))
        vectors[0] = [2.0, 7.0, 1.0]
        vectors[1] = [0.5, -1.0, 3.0]
        e = SensingEnsemble(m=2, dim=3, vectors=vectors, seed=0)
        sig = SparseSignal(dim=3, support=np.array([0]), values=np.array([1.0]))
        b = measure(e, sig)
        assert b[0] == 4.0 and b[1] == 0.25

    def test_sign_invariance_bitwise(self):
        e = make_ensemble(9, 20, 5)
        sig = flat_signal(9, [2, 6], [1, 1])
        assert np.array_equal(measure(e, sig), measure(e, sig.negated()))

    def test_matches_lifted_operator(self):
        e = make_ensemble(8, 15, 6)
        sig = flat_signal(8, [0, 3, 5], [1, -1, 1])
        x = sig.dense()
        b = measure(e, sig)
        a = apply_A(e, np.outer(x, x))
        assert np.abs(b - a).max() <= 1e-10 * max(1.0, np.abs(b).max())

    def test_dimension_mismatch(self):
        e = make_ensemble(4, 3, 0)
        with pytest.raises(ValueError):
            measure(e, flat_signal(5, [0], [1]))


class TestOperator:
    def test_identity_gives_row_norms(self):
        e = make_ensemble(6, 9, 2)
        out = apply_A(e, np.eye(6))
        assert np.allclose(out, (e.vectors**2).sum(axis=1), atol=1e-12)

    def test_zero(self):
        e = make_ensemble(6, 9, 2)
        assert np.array_equal(apply_A(e, np.zeros((6, 6))), np.zeros(9))

    def test_double_loop_oracle(self):
        e = make_ensemble(8, 11, 7)
        gen = np.random.default_rng(0)
        X = gen.standard_normal((8, 8))
        X = 0.5 * (X + X.T)
        expected = np.array([
            sum(
                e.vectors[j, a] * X[a, b] * e.vectors[j, b]
                for a in range(8)
                for b in range(8)
            )
            for j in range(11)
        ])
        assert np.abs(apply_A(e, X) - expected).max() <= 1e-10 * np.abs(expected).max()

    def test_adjoint_basis_vector(self):
        e = make_ensemble(5, 4, 3)
        v = np.zeros(4)
        v[0] = 1.0
        Y = apply_A_adjoint(e, v)
        z = e.vectors[0]
        assert np.allclose(Y, np.outer(z, z), atol=1e-12)

    def test_adjoint_zero(self):
        e = make_ensemble(5, 4, 3)
        assert np.array_equal(apply_A_adjoint(e, np.zeros(4)), np.zeros((5, 5)))

    def test_adjoint_identity(self):
        e = make_ensemble(7, 10, 9)
        gen = np.random.default_rng(1)
        for _ in range(20):
            X = gen.standard_normal((7, 7))
            X = 0.5 * (X + X.T)
            v = gen.standard_normal(10)
            lhs = float(apply_A(e, X) @ v)
            rhs = inner(X, apply_A_adjoint(e, v))
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_length_mismatch(self):
        e = make_ensemble(5, 4, 3)
        with pytest.raises(ValueError):
            apply_A_adjoint(e, np.zeros(5))


class TestProjections:
    def test_full_support_omega_identity(self):
        n = 4
        sig = flat_signal(n, range(n), [1] * n)
        ctx = SubspaceContext.from_signal(sig)
        X = np.random.default_rng(2).standard_normal((n, n))
        X = 0.5 * (X + X.T)
        assert np.allclose(project_Omega(ctx, X), X, atol=0)

    def test_gamma_omega_disjoint(self):
        ctx = context()
        X = np.random.default_rng(3).standard_normal((5, 5))
        X = 0.5 * (X + X.T)
        assert np.array_equal(project_Gamma(ctx, project_Omega(ctx, X)), np.zeros((5, 5)))

    def test_orthogonal_split(self):
        ctx = context()
        X = np.random.default_rng(4).standard_normal((5, 5))
        X = 0.5 * (X + X.T)
        XO = project_Omega(ctx, X)
        assert abs(
            np.linalg.norm(XO) ** 2 + np.linalg.norm(X - XO) ** 2 - np.linalg.norm(X) ** 2
        ) < 1e-10

    @pytest.mark.parametrize("proj", [project_Omega, project_Gamma, project_T, project_T_cap_Omega])
    def test_idempotent_selfadjoint_contractive(self, proj):
        ctx = context(n=7, support=(1, 3, 4), signs=(1, -1, 1))
        gen = np.random.default_rng(5)
        for _ in range(5):
            X = gen.standard_normal((7, 7))
            X = 0.5 * (X + X.T)
            Y = gen.standard_normal((7, 7))
            Y = 0.5 * (Y + Y.T)
            PX = proj(ctx, X)
            assert np.linalg.norm(proj(ctx, PX) - PX) <= 1e-12 * max(1.0, np.linalg.norm(PX))
            assert abs(inner(PX, Y) - inner(X, proj(ctx, Y))) <= 1e-10
            assert np.linalg.norm(PX) <= np.linalg.norm(X) + 1e-12

    def test_T_fixed_point(self):
        ctx = context()
        P = np.outer(ctx.x, ctx.x)
        assert np.allclose(project_T(ctx, P), P, atol=1e-14)

    def test_T_sign_matrix_identity_coordinate(self):
        # 1-sparse unit signal: P_T(sgn sgn^T) collapses to e1 e1^T and the
        # expansion ||x||_1 (x sgn^T + sgn x^T) - ||x||_1^2 x x^T agrees
        sig = SparseSignal(dim=4, support=np.array([0]), values=np.array([1.0]))
        ctx = SubspaceContext.from_signal(sig)
        s = ctx.sign_vector()
        P = project_T(ctx, np.outer(s, s))
        E = np.zeros((4, 4))
        E[0, 0] = 1.0
        assert np.allclose(P, E, atol=1e-14)
        x = ctx.x
        n1 = np.abs(x).sum()
        expansion = n1 * (np.outer(x, s) + np.outer(s, x)) - n1**2 * np.outer(x, x)
        assert np.allclose(P, expansion, atol=1e-14)

    def test_T_sign_matrix_identity_general(self):
        ctx = context(n=6, support=(0, 2, 5), signs=(1, -1, -1))
        s = ctx.sign_vector()
        x = ctx.x
        n1 = np.abs(x).sum()
        expansion = n1 * (np.outer(x, s) + np.outer(s, x)) - n1**2 * np.outer(x, x)
        assert np.allclose(project_T(ctx, np.outer(s, s)), expansion, atol=1e-12)

    def test_T_residual_orthogonal(self):
        ctx = context(n=6, support=(1, 2), signs=(1, 1))
        gen = np.random.default_rng(6)
        X = gen.standard_normal((6, 6))
        X = 0.5 * (X + X.T)
        R = X - project_T(ctx, X)
        for _ in range(10):
            w = gen.standard_normal(6)
            member = np.outer(ctx.x, w) + np.outer(w, ctx.x)
            assert abs(inner(R, member)) < 1e-10

    def test_T_omega_commute(self):
        ctx = context(n=8, support=(0, 4, 6), signs=(1, 1, -1))
        gen = np.random.default_rng(7)
        for _ in range(5):
            X = gen.standard_normal((8, 8))
            X = 0.5 * (X + X.T)
            a = project_T(ctx, project_Omega(ctx, X))
            b = project_Omega(ctx, project_T(ctx, X))
            assert np.linalg.norm(a - b) <= 1e-12 * max(1.0, np.linalg.norm(a))

    def test_T_cap_Omega_on_gamma_supported(self):
        ctx = context()
        X = np.zeros((5, 5))
        X[3, 4] = X[4, 3] = 2.5
        X[2, 2] = 1.0
        assert np.array_equal(project_T_cap_Omega(ctx, X), np.zeros((5, 5)))

    def test_T_cap_Omega_fixed_point(self):
        ctx = context()
        P = np.outer(ctx.x, ctx.x)
        assert np.allclose(project_T_cap_Omega(ctx, P), P, atol=1e-14)


class TestBuildX0:
    def test_coordinate_case(self):
        sig = SparseSignal(dim=3, support=np.array([0]), values=np.array([1.0]))
        ctx = SubspaceContext.from_signal(sig)
        X0 = build_X0(ctx, 2.0)
        expected = np.zeros((3, 3))
        expected[0, 0] = 3.0
        assert np.allclose(X0, expected, atol=1e-14)

    def test_norm_bound(self):
        ctx = context(n=7, support=(0, 1, 4), signs=(1, -1, 1))
        lam = 3.5
        X0 = build_X0(ctx, lam)
        n1 = np.abs(ctx.x).sum()
        k = ctx.k
        assert np.linalg.norm(X0) <= lam + n1**2 + 2 * np.sqrt(k) * n1 + 1e-12

    def test_membership(self):
        ctx = context(n=7, support=(2, 3), signs=(1, 1))
        X0 = build_X0(ctx, 1.7)
        assert np.linalg.norm(project_T_cap_Omega(ctx, X0) - X0) <= 1e-12 * np.linalg.norm(X0)


class TestContext:
    def test_validation(self):
        x = np.zeros(4)
        x[1] = 1.0
        with pytest.raises(ValueError):
            SubspaceContext(dim=4, support=np.array([0]), x=x)  # wrong support
        with pytest.raises(ValueError):
            SubspaceContext(dim=4, support=np.array([1]), x=2 * x)  # not unit


class TestJsonForms:
    def test_ensemble_round_trip(self):
        e = make_ensemble(6, 4, 77)
        obj = ensemble_to_json(e)
        assert set(obj) == {"n", "m", "seed"}
        e2 = ensemble_from_json(json.loads(json.dumps(obj)))
        assert np.array_equal(e.vectors, e2.vectors)

    def test_signal_round_trip(self):
        sig = flat_signal(9, [1, 5], [1, -1])
        obj = json.loads(json.dumps(signal_to_json(sig)))
        sig2 = signal_from_json(obj)
        assert sig2.dim == 9
        assert np.array_equal(sig.support, sig2.support)
        assert np.array_equal(sig.values, sig2.values)

    def test_measurements_round_trip(self):
        b = np.array([0.0, 1.5, 2.25])
        assert np.array_equal(measurements_from_json(measurements_to_json(b)), b)
        with pytest.raises(ValueError):
            measurements_from_json([[1.0]])
