"""First-order solver for the lifted sparse phase-retrieval program

    minimize   ||X||_1 + lam * Tr(X)
    subject to A(X) = b,  X >= 0  (PSD),

via three-set consensus operator splitting. Each structural piece has a
cheap exact proximal map:

  1. entrywise prox of ||.||_1 + lam*Tr  (shift-then-shrink on the diagonal),
  2. projection onto the PSD cone,
  3. projection onto the affine set {X : A(X) = b} through the Gram
     factorization of the measurement operator.

The three local copies are averaged into a consensus iterate; scaled dual
variables enforce agreement. Residuals follow the standard consensus
definitions (copy disagreement / consensus change), normalized by
max(1, ||b||_2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import psd_project, soft_threshold, sym_eigen, symmetrize
from .measurement import SensingEnsemble, apply_A, apply_A_adjoint


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 1.0
    rho: float = 1.0
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    max_iter: int = 20000
    over_relaxation: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not 1.0 <= self.over_relaxation <= 1.9:
            raise ValueError("over_relaxation must lie in [1, 1.9]")

    def with_lam(self, lam: float) -> "SolverConfig":
        return replace(self, lam=lam)


@dataclass(eq=False)
class SolveResult:
    X_hat: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float
    converged: bool
    residual_history: list = field(default_factory=list)


@dataclass(eq=False)
class RecoveredSignal:
    x_hat: np.ndarray
    top_eigenvalue: float
    rank_gap: float


def objective_value(X, lam: float) -> float:
    X = np.asarray(X, dtype=float)
    return float(np.abs(X).sum() + lam * np.trace(X))


def affine_project(e: SensingEnsemble, X, b) -> np.ndarray:
    """Frobenius-nearest symmetric matrix with A(X) = b:
    X - A*(Gram^{-1}(A(X) - b))."""
    b = np.asarray(b, dtype=float)
    w = e.gram_solve(apply_A(e, X) - b)
    return np.asarray(X, dtype=float) - apply_A_adjoint(e, w)


def _prox_l1_trace(V: np.ndarray, lam: float, rho: float) -> np.ndarray:
    """Prox of ||.||_1 + lam*Tr with penalty rho: soft threshold by 1/rho,
    diagonal shifted by lam/rho first (exact prox of t -> |t| + lam*t)."""
    W = soft_threshold(V, 1.0 / rho)
    d = V.diagonal() - lam / rho
    np.fill_diagonal(W, np.sign(d) * np.maximum(np.abs(d) - 1.0 / rho, 0.0))
    return W


def _feasibility_polish(e, X, b, tol_eig, max_rounds=60):
    """Alternate PSD and affine projections so the returned iterate is
    exactly feasible and PSD up to tol_eig. Removes the residual splitting
    slack from the consensus average; a no-op when X already qualifies."""
    Y = symmetrize(X)
    for _ in range(max_rounds):
        Y = affine_project(e, Y, b)
        mineig = float(np.linalg.eigvalsh(Y)[0])
        if mineig >= -tol_eig:
            return Y, mineig
        Y = psd_project(Y)
    Y = affine_project(e, Y, b)
    return Y, float(np.linalg.eigvalsh(Y)[0])


_HISTORY_ITERS = (1, 10, 100, 1000, 10000)


def solve_trace_l1(e: SensingEnsemble, b, cfg: SolverConfig) -> SolveResult:
    """Run the consensus splitting until both residuals fall below the
    configured tolerances or the iteration cap is reached.

    Returns the last iterate either way; ``converged`` is set only when the
    residual test passed and the returned matrix is feasible to
    tol_primal * max(1, ||b||) with smallest eigenvalue >= -tol_primal.
    Iteration-cap exhaustion is reported through the flag, not an exception.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (e.m,):
        raise ValueError(f"measurement vector has shape {b.shape}, expected ({e.m},)")
    n = e.dim
    rho, alpha = cfg.rho, cfg.over_relaxation
    bscale = max(1.0, float(np.linalg.norm(b)))

    e._factorize()  # fail fast on an ill-posed Gram

    Z = np.zeros((n, n))
    U1 = np.zeros((n, n))
    U2 = np.zeros((n, n))
    U3 = np.zeros((n, n))

    check_every = 25
    history = []
    primal = dual = math.inf
    residuals_ok = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        X1 = _prox_l1_trace(Z - U1, cfg.lam, rho)
        X2 = psd_project(Z - U2)
        X3 = affine_project(e, Z - U3, b)
        if alpha != 1.0:
            X1 = alpha * X1 + (1.0 - alpha) * Z
            X2 = alpha * X2 + (1.0 - alpha) * Z
            X3 = alpha * X3 + (1.0 - alpha) * Z
        Z_old = Z
        Z = ((X1 + U1) + (X2 + U2) + (X3 + U3)) / 3.0
        U1 = U1 + X1 - Z
        U2 = U2 + X2 - Z
        U3 = U3 + X3 - Z

        log_point = it in _HISTORY_ITERS
        if it % check_every == 0 or it == cfg.max_iter or log_point:
            primal = math.sqrt(
                np.linalg.norm(X1 - Z) ** 2
                + np.linalg.norm(X2 - Z) ** 2
                + np.linalg.norm(X3 - Z) ** 2
            ) / bscale
            dual = rho * math.sqrt(3.0) * float(np.linalg.norm(Z - Z_old)) / bscale
            if log_point:
                history.append((it, primal, dual))
            if primal < cfg.tol_primal and dual < cfg.tol_dual:
                residuals_ok = True
                break

    X_hat, mineig = _feasibility_polish(e, Z, b, cfg.tol_primal)
    feas = float(np.linalg.norm(apply_A(e, X_hat) - b)) / bscale
    converged = residuals_ok and feas <= cfg.tol_primal and mineig >= -cfg.tol_primal
    return SolveResult(
        X_hat=X_hat,
        iterations=it,
        primal_residual=primal,
        dual_residual=dual,
        objective=objective_value(X_hat, cfg.lam),
        converged=converged,
        residual_history=history,
    )


def extract_signal(X_hat) -> RecoveredSignal:
    """Leading eigenpair of the (approximately PSD) solution, scaled to the
    rank-1 factor: x_hat = sqrt(sigma1) * u1.

    rank_gap = sigma1 / max(sigma2, eps) quantifies how close the solution
    is to rank one; values below ~10 should be treated as ambiguous.
    """
    spec = sym_eigen(X_hat)
    sigma1 = float(spec.eigenvalues[0])
    if sigma1 <= 0:
        raise ValueError("degenerate solution: top eigenvalue is not positive")
    sigma2 = float(spec.eigenvalues[1]) if spec.eigenvalues.size > 1 else 0.0
    eps = 1e-12 * sigma1
    x_hat = math.sqrt(sigma1) * spec.eigenvectors[:, 0]
    return RecoveredSignal(
        x_hat=x_hat,
        top_eigenvalue=sigma1,
        rank_gap=sigma1 / max(sigma2, eps),
    )


def check_success(x_hat, x_true, tol: float) -> tuple[bool, float]:
    """Relative recovery error modulo sign:
    err = min(||x_hat - x||, ||x_hat + x||) / ||x||; success iff err <= tol."""
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_hat.shape != x_true.shape:
        raise ValueError("dimension mismatch between recovered and true signal")
    scale = float(np.linalg.norm(x_true))
    if scale == 0.0:
        raise ValueError("x_true must be nonzero")
    err = min(
        float(np.linalg.norm(x_hat - x_true)), float(np.linalg.norm(x_hat + x_true))
    ) / scale
    return err <= tol, err
