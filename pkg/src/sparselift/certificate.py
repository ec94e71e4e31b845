"""Approximate dual certificates for the l1+trace program, built by the
golfing scheme.

The sensing vectors are split into l = floor(2 log n) + 3 groups. Starting
from the certificate target X0 = lam*x x^T + P_T(sgn(x) sgn(x)^T), each
round eigendecomposes the rank<=2 residual on the support block, feeds the
eigenpairs to the truncated-moment estimator built from one fresh group,
and subtracts the T-cap-Omega component, shrinking the residual
geometrically when the groups are large enough. The accumulated Y lives in
the range of the adjoint operator by construction, so it is a legitimate
dual candidate; :func:`verify_certificate` measures the three closeness
conditions that make x x^T the unique program solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import NumericalFailure, sym_eigen
from .measurement import (
    SensingEnsemble,
    SubspaceContext,
    build_X0,
    project_Omega,
    project_T,
    project_T_cap_Omega,
)

TRUNCATION_THRESHOLD = 3.0


def truncated_second_moment(threshold: float = TRUNCATION_THRESHOLD) -> float:
    """E[z^2 1{|z| <= a}] for standard normal z, in closed form:
    erf(a/sqrt(2)) - 2 a phi(a)."""
    a = float(threshold)
    phi = math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
    return math.erf(a / math.sqrt(2.0)) - 2.0 * a * phi


def truncated_fourth_moment(threshold: float = TRUNCATION_THRESHOLD) -> float:
    """E[z^4 1{|z| <= a}] in closed form: 3 erf(a/sqrt(2)) - 2 phi(a)(a^3 + 3a)."""
    a = float(threshold)
    phi = math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
    return 3.0 * math.erf(a / math.sqrt(2.0)) - 2.0 * phi * (a**3 + 3.0 * a)


_BETA2 = truncated_second_moment()
_BETA4 = truncated_fourth_moment()


@dataclass(frozen=True)
class TruncatedMoments:
    beta2: float
    beta4: float
    threshold: float


def truncated_moments() -> TruncatedMoments:
    """Normalizing moments of the golfing estimator at the standard
    truncation level 3."""
    return TruncatedMoments(
        beta2=truncated_second_moment(),
        beta4=truncated_fourth_moment(),
        threshold=TRUNCATION_THRESHOLD,
    )


def num_groups(n: int) -> int:
    """Group count l = floor(2 log n) + 3 (natural logarithm)."""
    return int(math.floor(2.0 * math.log(n))) + 3


class InfeasibleGrouping(ValueError):
    """The requested group partition cannot be formed (more groups than
    vectors)."""


def partition_groups(m: int, l: int) -> list[np.ndarray]:
    """Contiguous index blocks of size floor(m/l), the first m mod l one
    larger. Refuses when l > m rather than degrading to empty groups."""
    if l > m:
        raise InfeasibleGrouping(f"cannot split {m} vectors into {l} nonempty groups")
    sizes = [m // l + (1 if i < m % l else 0) for i in range(l)]
    edges = np.cumsum([0] + sizes)
    return [np.arange(edges[i], edges[i + 1]) for i in range(l)]


def _check_direction(u: np.ndarray, ctx: SubspaceContext, name: str) -> None:
    if abs(np.linalg.norm(u) - 1.0) > 1e-8:
        raise ValueError(f"{name} must be unit-norm")
    off = np.delete(u, ctx.support)
    if np.abs(off).max(initial=0.0) > 1e-8:
        raise ValueError(f"{name} must be supported on G")


def f_operator(
    group_vectors: np.ndarray,
    ctx: SubspaceContext,
    lam1: float,
    lam2: float,
    u1: np.ndarray,
    u2: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    """One golfing round's estimator.

    With q_a(z) = <z_G, u_a> and beta2-centered indicator weights,

        Y = 1/(m_i (beta4 - beta2)) * sum_j [ lam1 (q_1^2 1{|q_1|<=3} - beta2)
                                            + lam2 (q_2^2 1{|q_2|<=3} - beta2) ] z_j z_j^T.

    Restricted to the support block this is an unbiased estimator of
    lam1 u1 u1^T + lam2 u2 u2^T. Returns (Y, coefficients) so the caller
    can accumulate the dual weights. ``u2`` may be None when lam2 == 0.
    """
    group_vectors = np.asarray(group_vectors, dtype=float)
    m_i = group_vectors.shape[0]
    if m_i < 1 or group_vectors.shape[1] != ctx.dim:
        raise ValueError("group must be a nonempty (m_i, n) array")
    _check_direction(np.asarray(u1, dtype=float), ctx, "u1")
    q1 = group_vectors @ u1
    coeffs = lam1 * (q1**2 * (np.abs(q1) <= TRUNCATION_THRESHOLD) - _BETA2)
    if u2 is not None:
        u2 = np.asarray(u2, dtype=float)
        _check_direction(u2, ctx, "u2")
        if abs(float(u1 @ u2)) > 1e-8:
            raise ValueError("u1 and u2 must be orthogonal")
        q2 = group_vectors @ u2
        coeffs = coeffs + lam2 * (q2**2 * (np.abs(q2) <= TRUNCATION_THRESHOLD) - _BETA2)
    elif lam2 != 0.0:
        raise ValueError("u2 is required when lam2 is nonzero")
    coeffs = coeffs / (m_i * (_BETA4 - _BETA2))
    Y = (group_vectors * coeffs[:, None]).T @ group_vectors
    return 0.5 * (Y + Y.T), coeffs


@dataclass(eq=False)
class Certificate:
    """Dual weights v with Y = sum_j v_j z_j z_j^T, the group partition that
    produced them, and the final unresolved residual X_l in T cap Omega."""

    weights: np.ndarray
    Y: np.ndarray
    groups: list
    X_residual: np.ndarray

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.X_residual))


def golfing_construct(
    e: SensingEnsemble, ctx: SubspaceContext, lam: float
) -> Certificate:
    """Run the full golfing iteration over l = floor(2 log n) + 3 fresh
    groups.

    Every iterate X_i stays in T cap Omega, hence has rank <= 2 on the
    support block; a rank above 2 (beyond 1e-8 relative) signals a
    projection bug and raises :class:`NumericalFailure`.
    """
    n, m, k = e.dim, e.m, ctx.k
    groups = partition_groups(m, num_groups(n))
    X = build_X0(ctx, lam)
    Y = np.zeros((n, n))
    weights = np.zeros(m)
    G = ctx.support
    for idx in groups:
        block = X[np.ix_(G, G)]
        spec = sym_eigen(block)
        scale = max(float(np.linalg.norm(X)), 1e-300)
        if k > 2 and np.sort(np.abs(spec.eigenvalues))[-3] > 1e-8 * scale:
            raise NumericalFailure(
                "golfing iterate has rank above 2 on the support block",
                residual=float(np.sort(np.abs(spec.eigenvalues))[-3] / scale),
            )
        order = np.argsort(-np.abs(spec.eigenvalues))
        lam1 = float(spec.eigenvalues[order[0]])
        u1 = np.zeros(n)
        u1[G] = spec.eigenvectors[:, order[0]]
        lam2, u2 = 0.0, None
        if k >= 2:
            lam2 = float(spec.eigenvalues[order[1]])
            u2 = np.zeros(n)
            u2[G] = spec.eigenvectors[:, order[1]]
        Y_i, coeffs = f_operator(e.vectors[idx], ctx, lam1, lam2, u1, u2)
        weights[idx] = coeffs
        Y += Y_i
        X = X - project_T_cap_Omega(ctx, Y_i)
    return Certificate(weights=weights, Y=Y, groups=groups, X_residual=X)


@dataclass(frozen=True)
class CertificateReport:
    """Measured left-hand sides of the three dual-certificate conditions,
    their thresholds, and pass flags (passed[i] iff measured <= threshold)."""

    norm_TcapOmega_gap: float
    norm_Tperp_Omega: float
    norm_Omega_perp_inf: float
    thresholds: tuple[float, float, float]
    passed: tuple[bool, bool, bool]

    @property
    def all_passed(self) -> bool:
        return all(self.passed)

    def to_json(self, **extra) -> dict:
        obj = {
            "norm_TcapOmega_gap": self.norm_TcapOmega_gap,
            "norm_Tperp_Omega": self.norm_Tperp_Omega,
            "norm_Omega_perp_inf": self.norm_Omega_perp_inf,
            "thresholds": list(self.thresholds),
            "passed": list(self.passed),
        }
        obj.update(extra)
        return obj


def verify_certificate(
    cert: Certificate, ctx: SubspaceContext, lam: float, C: float
) -> CertificateReport:
    """Measure the three certificate conditions against the target X0:

        ||Y_{T cap Omega} - X0||_F <= ||X0||_F / (6 n^2)
        ||Y_{T_perp cap Omega}||   <= ||X0||_F / 5        (spectral norm)
        ||Y_{Omega_perp}||_inf     <= C sqrt(log n)/sqrt(m) ||X0||_F
    """
    n = ctx.dim
    m = cert.weights.size
    X0 = build_X0(ctx, lam)
    nX0 = float(np.linalg.norm(X0))
    Y_Omega = project_Omega(ctx, cert.Y)
    Y_TO = project_T(ctx, Y_Omega)
    gap = float(np.linalg.norm(Y_TO - X0))
    tperp = float(np.max(np.abs(np.linalg.eigvalsh(Y_Omega - Y_TO))))
    operp = float(np.abs(cert.Y - Y_Omega).max())
    thresholds = (
        nX0 / (6.0 * n * n),
        nX0 / 5.0,
        C * math.sqrt(math.log(n)) / math.sqrt(m) * nX0,
    )
    measured = (gap, tperp, operp)
    passed = tuple(v <= t for v, t in zip(measured, thresholds))
    return CertificateReport(
        norm_TcapOmega_gap=gap,
        norm_Tperp_Omega=tperp,
        norm_Omega_perp_inf=operp,
        thresholds=thresholds,
        passed=passed,
    )


@dataclass(frozen=True)
class LambdaWindow:
    """Admissible trace-weight window for guaranteed recovery:
    lambda_min < lam < lambda_max with the induced measurement requirement
    m > C * lam^2 * log n."""

    lambda_min: float
    lambda_max: float
    C: float
    n: int
    m: int

    @property
    def is_empty(self) -> bool:
        return self.lambda_min >= self.lambda_max

    def m_required(self, lam: float) -> float:
        return self.C * lam * lam * math.log(self.n)

    def admits(self, lam: float) -> bool:
        return (
            self.lambda_min < lam < self.lambda_max
            and self.m > self.m_required(lam)
        )


def lambda_window(ctx: SubspaceContext, n: int, m: int, C: float) -> LambdaWindow:
    """Window endpoints lambda_min = sqrt(k)||x||_1 + 1, lambda_max = n^2/4."""
    norm1 = float(np.abs(ctx.x).sum())
    return LambdaWindow(
        lambda_min=math.sqrt(ctx.k) * norm1 + 1.0,
        lambda_max=n * n / 4.0,
        C=C,
        n=n,
        m=m,
    )
