"""Reproducible experiment harness: instance generation, recovery trials,
phase-transition sweeps, and stable CSV/JSON emission.

Every trial derives its own seed from the task indices, so sweeps are
deterministic for a given base seed regardless of worker scheduling. All
CSV files carry a ``schema_version`` column.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .measurement import SensingEnsemble, SparseSignal, make_ensemble, measure
from .rng import derive_seed, generator, standard_normal
from .solver import SolverConfig, check_success, extract_signal, solve_trace_l1
from .verify import BudgetExceeded

SCHEMA_VERSION = 1

SIGNAL_KINDS = ("flat", "gaussian-normalized")


def make_signal(n: int, k: int, kind: str, seed: int) -> SparseSignal:
    """Random unit-norm k-sparse signal on a uniform random support.

    ``flat``: entries +/- 1/sqrt(k) with random signs (so ||x||_1 = sqrt(k));
    ``gaussian-normalized``: Gaussian entries scaled to unit 2-norm.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if kind not in SIGNAL_KINDS:
        raise ValueError(f"unknown signal kind {kind!r}; expected one of {SIGNAL_KINDS}")
    gen = generator(seed)
    support = np.sort(gen.choice(n, size=k, replace=False))
    if kind == "flat":
        signs = np.where(gen.random(k) < 0.5, -1.0, 1.0)
        values = signs / math.sqrt(k)
    else:
        values = standard_normal(gen, k)
        while np.any(values == 0.0):  # probability zero, but keep the invariant exact
            values = standard_normal(gen, k)
        values = values / np.linalg.norm(values)
    return SparseSignal(dim=n, support=support, values=values)


@dataclass(frozen=True)
class ExperimentRecord:
    n: int
    k: int
    m: int
    lam: float
    seed: int
    success: bool
    rel_error: float
    iterations: int
    objective: float
    wall_time_ms: int


def run_recovery(
    sig: SparseSignal,
    e: SensingEnsemble,
    b: np.ndarray,
    lam: float,
    cfg: SolverConfig,
    success_tol: float = 1e-3,
    seed: int = 0,
) -> ExperimentRecord:
    """Solve one instance at one trace weight and score the recovery."""
    t0 = time.perf_counter()
    result = solve_trace_l1(e, b, cfg.with_lam(lam))
    try:
        rec = extract_signal(result.X_hat)
        success, err = check_success(rec.x_hat, sig.dense(), success_tol)
    except ValueError:  # degenerate (nonpositive top eigenvalue): treat as x_hat = 0
        success, err = False, 1.0
    wall_ms = int(round(1000.0 * (time.perf_counter() - t0)))
    return ExperimentRecord(
        n=sig.dim,
        k=sig.k,
        m=e.m,
        lam=float(lam),
        seed=seed,
        success=success,
        rel_error=err,
        iterations=result.iterations,
        objective=result.objective,
        wall_time_ms=wall_ms,
    )


DEFAULT_SWEEP_DOC = "1, 2, 4, 8, sqrt(m/log n)"


def lambda_values(rule: str, m: int, n: int) -> list[float]:
    """Trace-weight sweep values from a rule string.

    ``default``            -> [1, 2, 4, 8, sqrt(m/log n)]
    ``auto`` / ``auto:C0`` -> [sqrt(m/(4 C0 log n))], C0 defaults to 1
    ``fixed:<v>``          -> [v]
    ``list:<v1,v2,...>``   -> the listed values
    """
    logn = math.log(n)
    if logn <= 0:
        raise ValueError("need n >= 2 for lambda rules involving log n")
    if rule == "default":
        return [1.0, 2.0, 4.0, 8.0, math.sqrt(m / logn)]
    if rule == "auto" or rule.startswith("auto:"):
        c0 = float(rule.split(":", 1)[1]) if ":" in rule else 1.0
        if c0 <= 0:
            raise ValueError("auto rule constant must be positive")
        return [math.sqrt(m / (4.0 * c0 * logn))]
    if rule.startswith("fixed:"):
        return [float(rule.split(":", 1)[1])]
    if rule.startswith("list:"):
        vals = [float(v) for v in rule.split(":", 1)[1].split(",") if v.strip()]
        if not vals:
            raise ValueError("empty lambda list")
        return vals
    raise ValueError(f"unknown lambda rule {rule!r}")


@dataclass(eq=False)
class PhaseDiagram:
    k_grid: list
    m_grid: list
    success_rate: np.ndarray
    trials_per_cell: int


def _phase_cell_trial(n, k, m, trial, base_seed, lambda_rule, cfg, success_tol):
    sig_seed = derive_seed(base_seed, k, m, trial, 0)
    ens_seed = derive_seed(base_seed, k, m, trial, 1)
    sig = make_signal(n, k, "flat", sig_seed)
    e = make_ensemble(n, m, ens_seed)
    b = measure(e, sig)
    best_err = math.inf
    for lam in lambda_values(lambda_rule, m, n):
        rec = run_recovery(sig, e, b, lam, cfg, success_tol, seed=sig_seed)
        best_err = min(best_err, rec.rel_error)
        if rec.success:
            return True
    return best_err <= success_tol


def phase_diagram(
    n: int,
    k_grid,
    m_grid,
    trials: int,
    lambda_rule: str,
    seed: int,
    cfg: SolverConfig | None = None,
    success_tol: float = 1e-3,
    budget: float = 5e8,
    threads: int = 1,
) -> PhaseDiagram:
    """Per-cell recovery rate over a (k, m) grid (best lambda per trial).

    Refuses oversized runs: cells * trials * max_iter must stay within
    ``budget``.
    """
    k_grid = [int(k) for k in k_grid]
    m_grid = [int(m) for m in m_grid]
    if not k_grid or not m_grid:
        raise ValueError("k_grid and m_grid must be nonempty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = cfg or SolverConfig()
    cost = len(k_grid) * len(m_grid) * trials * cfg.max_iter
    if cost > budget:
        raise BudgetExceeded(
            f"phase diagram cost {cost:.3g} (cells*trials*max_iter) exceeds budget {budget:.3g}"
        )
    tasks = [
        (ki, mi, t)
        for ki in range(len(k_grid))
        for mi in range(len(m_grid))
        for t in range(trials)
    ]

    def run(task):
        ki, mi, t = task
        return ki, mi, _phase_cell_trial(
            n, k_grid[ki], m_grid[mi], t, seed, lambda_rule, cfg, success_tol
        )

    successes = np.zeros((len(k_grid), len(m_grid)), dtype=int)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, tasks))
    else:
        outcomes = [run(t) for t in tasks]
    for ki, mi, ok in outcomes:
        if ok:
            successes[ki, mi] += 1
    return PhaseDiagram(
        k_grid=k_grid,
        m_grid=m_grid,
        success_rate=successes / trials,
        trials_per_cell=trials,
    )


# --- CSV emission ---------------------------------------------------------

RECORD_FIELDS = (
    "schema_version", "n", "k", "m", "lambda", "seed",
    "success", "rel_error", "iterations", "objective", "wall_time_ms",
)

PHASE_FIELDS = (
    "schema_version", "n", "k", "m", "trials", "successes", "success_rate",
)

LEMMA_FIELDS = (
    "schema_version", "lemma_id", "trials", "violations",
    "violation_fraction", "worst_ratio", "params", "details", "elapsed_ms",
)


def _bool_str(v: bool) -> str:
    return "true" if v else "false"


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([
            SCHEMA_VERSION, r.n, r.k, r.m, repr(r.lam), r.seed,
            _bool_str(r.success), repr(r.rel_error), r.iterations,
            repr(r.objective), r.wall_time_ms,
        ])
    return buf.getvalue()


def phase_to_csv(pd: PhaseDiagram, n: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PHASE_FIELDS)
    for ki, k in enumerate(pd.k_grid):
        for mi, m in enumerate(pd.m_grid):
            rate = pd.success_rate[ki, mi]
            w.writerow([
                SCHEMA_VERSION, n, k, m, pd.trials_per_cell,
                int(round(rate * pd.trials_per_cell)), repr(float(rate)),
            ])
    return buf.getvalue()


def lemma_results_to_csv(results_with_elapsed) -> str:
    """Rows of (LemmaCheckResult, elapsed_ms) pairs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LEMMA_FIELDS)
    for res, elapsed_ms in results_with_elapsed:
        w.writerow([
            SCHEMA_VERSION, res.lemma_id.value, res.trials, res.violations,
            repr(res.violation_fraction), repr(res.worst_ratio),
            json.dumps(res.params, sort_keys=True),
            json.dumps(res.details, sort_keys=True),
            elapsed_ms,
        ])
    return buf.getvalue()
