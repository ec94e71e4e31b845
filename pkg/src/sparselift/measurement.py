"""Gaussian sensing ensembles, the quadratic measurement operator and its
adjoint, and the matrix subspace projections the sparse-recovery analysis
lives in.

An ensemble holds m i.i.d. standard normal vectors z_j in R^n. A signal x
is measured quadratically, b_j = <z_j, x>^2, which is linear in the lifted
matrix X = x x^T:

    A(X)_j = Tr(z_j z_j^T X),        A*(v) = sum_j v_j z_j z_j^T.

For a unit signal x with support G, the analysis subspaces are

    Omega = {X symmetric : X_ij = 0 unless i in G and j in G},
    Gamma = {X symmetric : X_ij = 0 whenever i in G or j in G},
    T     = {x w^T + w x^T : w in R^n}   (tangent space at x x^T).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .linalg import NumericalFailure, symmetrize
from .rng import generator, standard_normal


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """k-sparse vector: values on a support set, zero elsewhere."""

    dim: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=int)
        values = np.asarray(self.values, dtype=float)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if support.ndim != 1 or values.shape != support.shape:
            raise ValueError("support and values must be 1-d arrays of equal length")
        if support.size < 1:
            raise ValueError("support must contain at least one index")
        if np.unique(support).size != support.size:
            raise ValueError("support indices must be distinct")
        if support.min() < 0 or support.max() >= self.dim:
            raise ValueError("support indices out of range")
        if np.any(values == 0.0):
            raise ValueError("signal values on the support must be nonzero")
        order = np.argsort(support)
        object.__setattr__(self, "support", support[order])
        object.__setattr__(self, "values", values[order])

    @property
    def k(self) -> int:
        return int(self.support.size)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.dim)
        x[self.support] = self.values
        return x

    def negated(self) -> "SparseSignal":
        return SparseSignal(self.dim, self.support.copy(), -self.values)

    def norm1(self) -> float:
        return float(np.abs(self.values).sum())

    def norm2(self) -> float:
        return float(np.linalg.norm(self.values))

    def is_unit_norm(self, tol: float = 1e-12) -> bool:
        return abs(self.norm2() - 1.0) <= tol


@dataclass(eq=False)
class SensingEnsemble:
    """m Gaussian sensing vectors plus a lazily factorized Gram matrix.

    The Gram matrix of the measurement operator is G_ij = <z_i, z_j>^2; its
    Cholesky factor backs the affine projection onto {X : A(X) = b}. The
    vectors regenerate bit-identically from (seed, m, n).
    """

    m: int
    dim: int
    vectors: np.ndarray
    seed: int
    _cho: Optional[tuple] = field(default=None, repr=False)
    _chol: Optional[np.ndarray] = field(default=None, repr=False)

    def gram(self) -> np.ndarray:
        Z = self.vectors
        return (Z @ Z.T) ** 2

    def _factorize(self):
        if self._cho is not None:
            return
        G = self.gram()
        try:
            self._cho = sla.cho_factor(G, lower=True)
        except np.linalg.LinAlgError:
            ridge = 1e-10 * float(np.mean(np.diag(G)))
            try:
                self._cho = sla.cho_factor(G + ridge * np.eye(self.m), lower=True)
            except np.linalg.LinAlgError as exc:
                raise NumericalFailure(
                    f"Gram factorization failed even with ridge {ridge:.3e}; "
                    "the ensemble is numerically ill-posed"
                ) from exc

    def gram_cholesky(self) -> np.ndarray:
        """Lower-triangular factor L with L L^T equal to the (ridged) Gram."""
        self._factorize()
        return np.tril(self._cho[0])

    def gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve G w = rhs with the cached factorization."""
        self._factorize()
        return sla.cho_solve(self._cho, rhs)


def make_ensemble(n: int, m: int, seed: int) -> SensingEnsemble:
    """m x n matrix of i.i.d. N(0,1) entries, deterministic per (seed, n, m)."""
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    vectors = standard_normal(generator(seed), (m, n))
    return SensingEnsemble(m=m, dim=n, vectors=vectors, seed=int(seed))


def measure(e: SensingEnsemble, x: SparseSignal) -> np.ndarray:
    """Quadratic measurements b_j = <z_j, x>^2 (invariant to x -> -x)."""
    if x.dim != e.dim:
        raise ValueError(f"dimension mismatch: signal {x.dim}, ensemble {e.dim}")
    return (e.vectors @ x.dense()) ** 2


def apply_A(e: SensingEnsemble, X) -> np.ndarray:
    """Measurement operator A(X)_j = z_j^T X z_j, linear in X."""
    X = np.asarray(X, dtype=float)
    if X.shape != (e.dim, e.dim):
        raise ValueError(f"dimension mismatch: X {X.shape}, ensemble dim {e.dim}")
    Z = e.vectors
    return ((Z @ X) * Z).sum(axis=1)


def apply_A_adjoint(e: SensingEnsemble, v) -> np.ndarray:
    """Adjoint A*(v) = sum_j v_j z_j z_j^T; symmetric by construction."""
    v = np.asarray(v, dtype=float)
    if v.shape != (e.m,):
        raise ValueError(f"length mismatch: v has shape {v.shape}, expected ({e.m},)")
    Z = e.vectors
    return symmetrize((Z * v[:, None]).T @ Z)


@dataclass(frozen=True, eq=False)
class SubspaceContext:
    """Support G and unit signal x underlying the projections P_Omega,
    P_Gamma, P_T and P_{T cap Omega}. Analysis-side object: the solver
    never sees it."""

    dim: int
    support: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        support = np.sort(np.asarray(self.support, dtype=int))
        x = np.asarray(self.x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError("x must be a vector of length dim")
        nz = np.flatnonzero(x)
        if not np.array_equal(nz, support):
            raise ValueError("supp(x) must equal the given support")
        if abs(np.linalg.norm(x) - 1.0) > 1e-12:
            raise ValueError("x must be unit-norm to 1e-12")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_signal(cls, sig: SparseSignal) -> "SubspaceContext":
        return cls(dim=sig.dim, support=sig.support.copy(), x=sig.dense())

    @property
    def k(self) -> int:
        return int(self.support.size)

    def sign_vector(self) -> np.ndarray:
        return np.sign(self.x)


def _check_dim(ctx: SubspaceContext, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (ctx.dim, ctx.dim):
        raise ValueError(f"dimension mismatch: X {X.shape}, context dim {ctx.dim}")
    return X


def project_Omega(ctx: SubspaceContext, X) -> np.ndarray:
    """Keep the G x G block, zero everything else."""
    X = _check_dim(ctx, X)
    out = np.zeros_like(X)
    block = np.ix_(ctx.support, ctx.support)
    out[block] = X[block]
    return out


def project_Gamma(ctx: SubspaceContext, X) -> np.ndarray:
    """Zero every entry with a row or column index in G."""
    X = _check_dim(ctx, X)
    out = X.copy()
    out[ctx.support, :] = 0.0
    out[:, ctx.support] = 0.0
    return out


def project_T(ctx: SubspaceContext, X) -> np.ndarray:
    """Orthogonal projection onto T = {x w^T + w x^T}:
    P_T(X) = x x^T X + X x x^T - (x^T X x) x x^T."""
    X = _check_dim(ctx, X)
    x = ctx.x
    Xx = X @ x
    xXx = float(x @ Xx)
    return np.outer(x, Xx) + np.outer(Xx, x) - xXx * np.outer(x, x)


def project_T_cap_Omega(ctx: SubspaceContext, X) -> np.ndarray:
    """Projection onto T cap Omega. Since supp(x) = G, P_T and P_Omega
    commute and the composition is the orthogonal projection."""
    return project_T(ctx, project_Omega(ctx, X))


def build_X0(ctx: SubspaceContext, lam: float) -> np.ndarray:
    """Certificate target X0 = lam * x x^T + P_T(sgn(x) sgn(x)^T); lies in
    T cap Omega."""
    s = ctx.sign_vector()
    return lam * np.outer(ctx.x, ctx.x) + project_T(ctx, np.outer(s, s))


# --- JSON forms -----------------------------------------------------------
#
# Ensembles serialize as the regenerable triple {"n", "m", "seed"}; signals
# as {"n", "support", "values"} with 0-based support indices; measurement
# vectors as flat JSON arrays.


def ensemble_to_json(e: SensingEnsemble) -> dict:
    return {"n": e.dim, "m": e.m, "seed": e.seed}


def ensemble_from_json(obj: dict) -> SensingEnsemble:
    return make_ensemble(int(obj["n"]), int(obj["m"]), int(obj["seed"]))


def signal_to_json(x: SparseSignal) -> dict:
    return {
        "n": x.dim,
        "support": [int(i) for i in x.support],
        "values": [float(v) for v in x.values],
    }


def signal_from_json(obj: dict) -> SparseSignal:
    return SparseSignal(
        dim=int(obj["n"]),
        support=np.asarray(obj["support"], dtype=int),
        values=np.asarray(obj["values"], dtype=float),
    )


def measurements_to_json(b: np.ndarray) -> list:
    return [float(v) for v in np.asarray(b).ravel()]


def measurements_from_json(obj) -> np.ndarray:
    b = np.asarray(obj, dtype=float)
    if b.ndim != 1:
        raise ValueError("measurements must be a flat array")
    return b


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)
