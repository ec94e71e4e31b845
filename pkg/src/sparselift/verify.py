"""Monte Carlo verification of the concentration bounds behind the
recovery guarantee, the converse lower bound on the measurement count, the
subgradient-based non-optimality check, and a brute-force injectivity
oracle for the quadratic measurement system.

Each check draws fresh randomness per trial from a seed derived as
SeedSequence((base_seed, trial_index, stream)), so results are bit-for-bit
reproducible and independent of scheduling.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .certificate import TRUNCATION_THRESHOLD, truncated_second_moment, truncated_fourth_moment
from .measurement import SparseSignal, SensingEnsemble, make_ensemble, measure
from .rng import derive_seed, generator, standard_normal
from .solver import SolverConfig, check_success, extract_signal, solve_trace_l1


class LemmaId(str, Enum):
    L1_TRACE_SANDWICH = "L1_TRACE_SANDWICH"
    LOWRANK_LOWER = "LOWRANK_LOWER"
    L1_UPPER = "L1_UPPER"
    TRUNCATED_MOMENT = "TRUNCATED_MOMENT"
    CHI2_TAIL = "CHI2_TAIL"
    E0_EVENT = "E0_EVENT"


@dataclass(eq=False)
class LemmaCheckResult:
    lemma_id: LemmaId
    trials: int
    violations: int
    worst_ratio: float
    params: dict
    details: dict = field(default_factory=dict)

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.trials if self.trials else 0.0

    def to_json_record(self) -> dict:
        return {
            "lemma_id": self.lemma_id.value,
            "trials": self.trials,
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
            "params": dict(self.params),
            "details": dict(self.details),
        }


def _quad_form_l1_mean(e: SensingEnsemble, X: np.ndarray) -> float:
    Z = e.vectors
    return float(np.abs(((Z @ X) * Z).sum(axis=1)).mean())


def _random_psd_block(gen: np.random.Generator, k: int) -> np.ndarray:
    """Unit-trace PSD support block A A^T with A a k x r Gaussian factor,
    r uniform in {1..k}."""
    r = int(gen.integers(1, k + 1))
    A = standard_normal(gen, (k, r))
    blk = A @ A.T
    return blk / np.trace(blk)


def check_l1_trace_sandwich(
    n: int, k: int, m: int, trials: int, seed: int
) -> LemmaCheckResult:
    """Both-sided trace sandwich for random PSD matrices on the support
    block: (1 - 1/8) Tr(X) <= m^{-1} ||A(X)||_1 <= (1 + 1/8) Tr(X)."""
    violations = 0
    lo, hi = math.inf, -math.inf
    for t in range(trials):
        e = make_ensemble(n, m, derive_seed(seed, t, 0))
        gen = generator(derive_seed(seed, t, 1))
        X = np.zeros((n, n))
        X[:k, :k] = _random_psd_block(gen, k)
        ratio = _quad_form_l1_mean(e, X)  # Tr(X) = 1 by construction
        lo, hi = min(lo, ratio), max(hi, ratio)
        if not (1.0 - 1.0 / 8.0 <= ratio <= 1.0 + 1.0 / 8.0):
            violations += 1
    worst = hi if abs(hi - 1.0) >= abs(lo - 1.0) else lo
    return LemmaCheckResult(
        lemma_id=LemmaId.L1_TRACE_SANDWICH,
        trials=trials,
        violations=violations,
        worst_ratio=worst,
        params={"n": n, "k": k, "m": m, "seed": seed},
        details={"min_ratio": lo, "max_ratio": hi},
    )


def check_lowrank_lower(
    n: int, k: int, m: int, trials: int, seed: int
) -> LemmaCheckResult:
    """Spectral-norm lower bound for symmetric rank-2 support-block
    matrices with mixed-sign eigenvalues:
    m^{-1} ||A(X)||_1 >= 0.94 (1 - 1/8) ||X||."""
    bound = 0.94 * (1.0 - 1.0 / 8.0)
    violations = 0
    worst = math.inf
    for t in range(trials):
        e = make_ensemble(n, m, derive_seed(seed, t, 0))
        gen = generator(derive_seed(seed, t, 1))
        Q, _ = np.linalg.qr(standard_normal(gen, (k, 2)))
        a, b = np.abs(standard_normal(gen, 2)) + 0.1
        blk = a * np.outer(Q[:, 0], Q[:, 0]) - b * np.outer(Q[:, 1], Q[:, 1])
        X = np.zeros((n, n))
        X[:k, :k] = blk
        ratio = _quad_form_l1_mean(e, X) / max(a, b)
        worst = min(worst, ratio)
        if ratio < bound:
            violations += 1
    return LemmaCheckResult(
        lemma_id=LemmaId.LOWRANK_LOWER,
        trials=trials,
        violations=violations,
        worst_ratio=worst,
        params={"n": n, "k": k, "m": m, "seed": seed},
        details={"bound": bound},
    )


def check_l1_upper(n: int, m: int, trials: int, seed: int) -> LemmaCheckResult:
    """Entrywise-l1 upper bound for dense random symmetric matrices:
    m^{-1} ||A(X)||_1 <= (9/8) ||X||_1."""
    violations = 0
    worst = -math.inf
    for t in range(trials):
        e = make_ensemble(n, m, derive_seed(seed, t, 0))
        gen = generator(derive_seed(seed, t, 1))
        X = standard_normal(gen, (n, n))
        X = 0.5 * (X + X.T)
        ratio = _quad_form_l1_mean(e, X) / float(np.abs(X).sum())
        worst = max(worst, ratio)
        if ratio > 9.0 / 8.0:
            violations += 1
    return LemmaCheckResult(
        lemma_id=LemmaId.L1_UPPER,
        trials=trials,
        violations=violations,
        worst_ratio=worst,
        params={"n": n, "m": m, "seed": seed},
        details={"bound": 9.0 / 8.0},
    )


def check_truncated_moment(
    n: int, m: int, trials: int, seed: int, epsilon: float
) -> LemmaCheckResult:
    """Operator-norm concentration of the truncated-moment estimator around
    (beta4 - beta2) u u^T + beta2 I for random unit directions u."""
    beta2 = truncated_second_moment()
    beta4 = truncated_fourth_moment()
    violations = 0
    devs = np.empty(trials)
    for t in range(trials):
        gen = generator(derive_seed(seed, t, 1))
        u = standard_normal(gen, n)
        u /= np.linalg.norm(u)
        Z = make_ensemble(n, m, derive_seed(seed, t, 0)).vectors
        q = Z @ u
        w = q**2 * (np.abs(q) <= TRUNCATION_THRESHOLD)
        M = (Z * w[:, None]).T @ Z / m
        target = (beta4 - beta2) * np.outer(u, u) + beta2 * np.eye(n)
        dev = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (M + M.T) - target))))
        devs[t] = dev
        if dev > epsilon:
            violations += 1
    return LemmaCheckResult(
        lemma_id=LemmaId.TRUNCATED_MOMENT,
        trials=trials,
        violations=violations,
        worst_ratio=float(devs.max() / epsilon),
        params={"n": n, "m": m, "seed": seed, "epsilon": epsilon},
        details={"mean_deviation": float(devs.mean()), "max_deviation": float(devs.max())},
    )


def check_chi2_tail(N: int, m1: int, trials: int, seed: int) -> LemmaCheckResult:
    """Lower-tail bound for chi-squared residual norms.

    The squared norm of an N-dimensional Gaussian vector outside a fixed
    m1-dimensional subspace is chi2(N - m1); the Chernoff bound gives
    P(sample <= (N - m1)/2) <= (e^{1/2}/2)^{(N-m1)/2} <= e^{-0.09 (N-m1)}.
    ``violations`` counts tail events (samples at or below df/2).
    """
    if not 0 <= m1 < N:
        raise ValueError("need 0 <= m1 < N")
    df = N - m1
    gen = generator(derive_seed(seed, 0, 0))
    tail_events = 0
    total = 0.0
    batch = max(1, int(2e7) // df)
    done = 0
    while done < trials:
        size = min(batch, trials - done)
        samples = (standard_normal(gen, (size, df)) ** 2).sum(axis=1)
        tail_events += int((samples <= df / 2.0).sum())
        total += float(samples.sum())
        done += size
    bound = math.exp(-0.09 * df)
    empirical = tail_events / trials
    return LemmaCheckResult(
        lemma_id=LemmaId.CHI2_TAIL,
        trials=trials,
        violations=tail_events,
        worst_ratio=empirical / bound,
        params={"N": N, "m1": m1, "seed": seed},
        details={
            "df": df,
            "empirical_tail": empirical,
            "bound": bound,
            "sample_mean": total / trials,
        },
    )


def check_E0_event(
    n: int, k: int, m: int, trials: int, seed: int
) -> LemmaCheckResult:
    """Frequency of the bounded-projection event
    E0 = {<x, z_jG>^2 <= 10 log n for all j} versus 1 - m/n^5.

    Draws a fresh random unit k-sparse signal each trial; <x, z_G>^2 is
    chi2(1) regardless of the signal, and the collected samples are
    moment-checked in the details.
    """
    cap = 10.0 * math.log(n)
    failures = 0
    worst = -math.inf
    count = 0
    s1 = 0.0
    s2 = 0.0
    for t in range(trials):
        gen = generator(derive_seed(seed, t, 1))
        support = np.sort(gen.choice(n, size=k, replace=False))
        vals = standard_normal(gen, k)
        vals /= np.linalg.norm(vals)
        Z = make_ensemble(n, m, derive_seed(seed, t, 0)).vectors
        proj = (Z[:, support] @ vals) ** 2
        worst = max(worst, float(proj.max()) / cap)
        count += m
        s1 += float(proj.sum())
        s2 += float((proj**2).sum())
        if proj.max() > cap:
            failures += 1
    mean = s1 / count
    var = s2 / count - mean**2
    return LemmaCheckResult(
        lemma_id=LemmaId.E0_EVENT,
        trials=trials,
        violations=failures,
        worst_ratio=worst,
        params={"n": n, "k": k, "m": m, "seed": seed},
        details={
            "empirical_probability": 1.0 - failures / trials,
            "bound": 1.0 - m / n**5,
            "sample_mean": mean,
            "sample_var": var,
            "cap": cap,
        },
    )


@dataclass(frozen=True)
class ConverseBound:
    """Necessary measurement count for x x^T to be optimal at any trace
    weight: m >= min((k/4 - 1)^2, max(||x||_1^2 - k/2, 0)^2 / (500 log^2 n))."""

    term_spectral: float
    term_l1: float
    m_lower: float

    def to_json(self) -> dict:
        return {
            "term_spectral": self.term_spectral,
            "term_l1": self.term_l1,
            "m_lower": self.m_lower,
        }


def converse_bound(x: SparseSignal) -> ConverseBound:
    k = x.k
    n = x.dim
    norm1_sq = x.norm1() ** 2
    term_spectral = (k / 4.0 - 1.0) ** 2
    term_l1 = max(norm1_sq - k / 2.0, 0.0) ** 2 / (500.0 * math.log(n) ** 2)
    return ConverseBound(
        term_spectral=term_spectral,
        term_l1=term_l1,
        m_lower=min(term_spectral, term_l1),
    )


@dataclass(frozen=True)
class NonoptimalityEntry:
    lam: float
    gap: float
    converged: bool
    iterations: int
    objective_solver: float
    nonoptimal: bool
    rel_error: float

    @property
    def verdict(self) -> str:
        return "nonoptimal" if self.nonoptimal else "consistent-with-optimality"


@dataclass(eq=False)
class NonoptimalityReport:
    objective_lifted_signal: dict
    entries: list

    @property
    def all_nonoptimal(self) -> bool:
        return all(entry.nonoptimal for entry in self.entries)


def empirical_nonoptimality(
    e: SensingEnsemble,
    x: SparseSignal,
    lambda_list,
    cfg: SolverConfig,
    rel_gap_tol: float = 1e-5,
) -> NonoptimalityReport:
    """Solve the program for each trace weight and compare objectives
    against the lifted signal x x^T (which is always feasible for b
    measured from x).

    Declares "nonoptimal at lam" when the solver finds a feasible point
    whose objective is below objective(x x^T) by more than rel_gap_tol
    relative; otherwise reports "consistent with optimality" — never a
    positive optimality claim, since a first-order solver certifies
    nothing beyond its tolerance. Solver non-convergence is recorded per
    lam, not raised.
    """
    if x.k < 1:
        raise ValueError("signal must have at least one nonzero entry")
    b = measure(e, x)
    x_dense = x.dense()
    l1 = x.norm1() ** 2
    tr = x.norm2() ** 2
    entries = []
    obj_by_lam = {}
    for lam in lambda_list:
        obj_x = l1 + lam * tr
        obj_by_lam[lam] = obj_x
        result = solve_trace_l1(e, b, cfg.with_lam(lam))
        gap = obj_x - result.objective
        try:
            _, err = check_success(extract_signal(result.X_hat).x_hat, x_dense, 1.0)
        except ValueError:  # degenerate solution: score as x_hat = 0
            err = 1.0
        entries.append(
            NonoptimalityEntry(
                lam=float(lam),
                gap=float(gap),
                converged=result.converged,
                iterations=result.iterations,
                objective_solver=result.objective,
                nonoptimal=bool(gap > rel_gap_tol * obj_x),
                rel_error=float(err),
            )
        )
    return NonoptimalityReport(objective_lifted_signal=obj_by_lam, entries=entries)


class BudgetExceeded(ValueError):
    """The requested enumeration is beyond the configured work budget."""


@dataclass(eq=False)
class OracleResult:
    unique: bool
    counterexample: np.ndarray | None
    supports_checked: int

    @property
    def verdict(self) -> str:
        return "unique" if self.unique else "counterexample"


def _sqrt_b(b: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(b, 0.0))


def injectivity_oracle(
    vectors: np.ndarray,
    x: SparseSignal,
    k_max: int,
    tol: float = 1e-6,
    budget: float = 1e8,
) -> OracleResult:
    """Exhaustively decide whether the quadratic system determines x among
    all at-most-k_max-sparse vectors, modulo sign.

    For each candidate support T the linear systems <z_j|_T, y_T> = s_j
    sqrt(b_j) over all sign patterns s reduce to patterns on a full-rank
    subset of equations (selected by pivoted QR; the first pivot's sign is
    fixed to break the global +/- pair). Each candidate y is checked
    against every measurement on squares and refit by least squares over
    all m equations with its implied sign pattern, so the search is
    equivalent to enumerating every s in {+/-1}^m. Returns the first
    consistent y that is not +/-x, else "unique".
    """
    vectors = np.asarray(vectors, dtype=float)
    m, n = vectors.shape
    if x.dim != n:
        raise ValueError("signal dimension does not match the vectors")
    if not 1 <= k_max <= n:
        raise ValueError("need 1 <= k_max <= n")
    work = sum(
        math.comb(n, t) * 2 ** min(t, m) * m for t in range(1, k_max + 1)
    )
    if work > budget:
        raise BudgetExceeded(
            f"enumeration cost {work:.3g} exceeds budget {budget:.3g}"
        )
    x_dense = x.dense()
    b = (vectors @ x_dense) ** 2
    rb = _sqrt_b(b)
    bscale = max(1.0, float(np.abs(b).max()))
    xscale = max(1.0, float(np.linalg.norm(x_dense)))
    ident_tol = max(tol, 1e-8) * xscale
    supports = 0
    for t in range(1, k_max + 1):
        for T in itertools.combinations(range(n), t):
            supports += 1
            Zt = vectors[:, T]
            # full-rank equation subset via column-pivoted QR of Zt^T
            _, R, piv = sla.qr(Zt.T, pivoting=True, mode="economic")
            diag = np.abs(np.diag(R))
            rank = int((diag > 1e-10 * diag[0]).sum()) if diag.size else 0
            if rank == 0:
                continue
            rows = piv[:rank]
            Zs = Zt[rows]
            rbs = rb[rows]
            for bits in itertools.product((1.0, -1.0), repeat=rank - 1):
                s = np.concatenate(([1.0], bits))
                y_t, *_ = np.linalg.lstsq(Zs, s * rbs, rcond=1e-10)
                resid = (Zt @ y_t) ** 2 - b
                if np.abs(resid).max() > tol * bscale:
                    continue
                # refit over all m equations with the implied signs
                s_full = np.sign(Zt @ y_t)
                s_full[s_full == 0] = 1.0
                y_t, *_ = np.linalg.lstsq(Zt, s_full * rb, rcond=1e-10)
                if np.abs(Zt @ y_t - s_full * rb).max() > tol * math.sqrt(bscale):
                    continue
                if np.abs((Zt @ y_t) ** 2 - b).max() > tol * bscale:
                    continue
                y = np.zeros(n)
                y[list(T)] = y_t
                dist = min(
                    float(np.linalg.norm(y - x_dense)),
                    float(np.linalg.norm(y + x_dense)),
                )
                if dist > ident_tol:
                    return OracleResult(
                        unique=False, counterexample=y, supports_checked=supports
                    )
    return OracleResult(unique=True, counterexample=None, supports_checked=supports)
