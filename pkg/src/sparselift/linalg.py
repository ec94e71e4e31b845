"""Dense symmetric-matrix kernels: eigendecomposition, cone projection,
entrywise proximal maps, and the norms used throughout the package.

Symmetric matrices are plain square ``numpy`` arrays. Constructors go
through :func:`symmetrize` so exact symmetry holds by construction; the
operations here preserve it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericalFailure(RuntimeError):
    """An iterative numerical kernel failed to converge.

    Carries the residual that remained when the iteration cap was hit.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


def symmetrize(X) -> np.ndarray:
    """Return the symmetric part (X + X^T)/2 as a float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    return 0.5 * (X + X.T)


def _check_square(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    return X


@dataclass(eq=False)
class Spectrum:
    """Eigendecomposition of a symmetric matrix.

    ``eigenvalues`` are sorted descending; column j of ``eigenvectors``
    belongs to ``eigenvalues[j]``. Each eigenvector carries the sign
    convention that its largest-magnitude coordinate is positive, which
    makes the decomposition deterministic across runs for matrices with
    simple spectrum. Repeated eigenvalues fix only the eigenspace, so
    downstream code must use spectral projectors in that case.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def sym_eigen(X) -> Spectrum:
    """Full eigendecomposition of a symmetric matrix.

    Raises :class:`NumericalFailure` if the underlying iteration does not
    converge (rare; dense symmetric input).
    """
    X = _check_square(X)
    try:
        vals, vecs = np.linalg.eigh(symmetrize(X))
    except np.linalg.LinAlgError as exc:  # no convergence within LAPACK's cap
        off = float(np.linalg.norm(X - np.diag(np.diag(X))))
        raise NumericalFailure(f"eigendecomposition failed: {exc}", residual=off) from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    # sign convention: largest-magnitude coordinate of each vector positive
    anchor = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[anchor, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return Spectrum(eigenvalues=vals, eigenvectors=vecs * signs)


def psd_project(X) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix (eigenvalue clamping)."""
    spec = sym_eigen(X)
    clamped = np.maximum(spec.eigenvalues, 0.0)
    Q = spec.eigenvectors
    return symmetrize((Q * clamped) @ Q.T)


def soft_threshold(X, tau: float) -> np.ndarray:
    """Entrywise shrinkage y = sign(x) * max(|x| - tau, 0). Requires tau >= 0."""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    X = np.asarray(X, dtype=float)
    return np.sign(X) * np.maximum(np.abs(X) - tau, 0.0)


@dataclass(frozen=True)
class MatrixNorms:
    fro: float
    spectral: float
    entrywise_l1: float
    entrywise_linf: float
    trace: float


def norms(X) -> MatrixNorms:
    """Frobenius / spectral / entrywise-l1 / entrywise-max / trace.

    The entrywise norms run over all n^2 entries (both triangles), matching
    the l1 and sup norms of the matrix vectorization.
    """
    X = _check_square(X)
    return MatrixNorms(
        fro=float(np.linalg.norm(X)),
        spectral=float(np.max(np.abs(np.linalg.eigvalsh(symmetrize(X))))),
        entrywise_l1=float(np.abs(X).sum()),
        entrywise_linf=float(np.abs(X).max()),
        trace=float(np.trace(X)),
    )


def inner(X, Y) -> float:
    """Trace inner product <X, Y> = Tr(XY) for symmetric X, Y."""
    X = _check_square(X)
    Y = _check_square(Y)
    if X.shape != Y.shape:
        raise ValueError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return float((X * Y).sum())
