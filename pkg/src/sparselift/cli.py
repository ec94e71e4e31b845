"""Command-line driver.

Subcommands: gen | recover | certify | verify-lemmas | phase-diagram | bound.
Exit codes: 0 success, 2 invalid arguments, 3 infeasible configuration,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .certificate import (
    InfeasibleGrouping,
    golfing_construct,
    num_groups,
    verify_certificate,
)
from .experiment import (
    SCHEMA_VERSION,
    lambda_values,
    lemma_results_to_csv,
    make_signal,
    phase_diagram,
    phase_to_csv,
    records_to_csv,
    run_recovery,
)
from .linalg import NumericalFailure
from .measurement import (
    SubspaceContext,
    dump_json,
    ensemble_from_json,
    ensemble_to_json,
    load_json,
    make_ensemble,
    measure,
    measurements_from_json,
    measurements_to_json,
    signal_from_json,
    signal_to_json,
)
from .solver import SolverConfig
from .verify import (
    BudgetExceeded,
    check_E0_event,
    check_chi2_tail,
    check_l1_trace_sandwich,
    check_l1_upper,
    check_lowrank_lower,
    check_truncated_moment,
    converse_bound,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def _add_common(p: argparse.ArgumentParser, default_seed: int = 0) -> None:
    p.add_argument("--seed", type=int, default=default_seed, help="base seed (64-bit)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for trial pools")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="as_json", action="store_true", help="emit JSON output")
    fmt.add_argument("--csv", dest="as_json", action="store_false", help="emit CSV output")
    p.set_defaults(as_json=False)


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--tol-primal", type=float, default=1e-7)
    p.add_argument("--tol-dual", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--over-relaxation", type=float, default=1.0)


def _solver_config(args, lam: float = 1.0) -> SolverConfig:
    return SolverConfig(
        lam=lam,
        rho=args.rho,
        tol_primal=args.tol_primal,
        tol_dual=args.tol_dual,
        max_iter=args.max_iter,
        over_relaxation=args.over_relaxation,
    )


def _instance_paths(directory: Path) -> tuple[Path, Path, Path]:
    return (
        directory / "signal.json",
        directory / "ensemble.json",
        directory / "measurements.json",
    )


def cmd_gen(args) -> int:
    if not 1 <= args.k <= args.n:
        raise ValueError(f"need 1 <= k <= n, got k={args.k}, n={args.n}")
    if args.m < 1:
        raise ValueError("need m >= 1")
    args.out.mkdir(parents=True, exist_ok=True)
    sig = make_signal(args.n, args.k, args.signal_kind, args.seed)
    e = make_ensemble(args.n, args.m, args.seed + 1)
    b = measure(e, sig)
    sig_path, ens_path, meas_path = _instance_paths(args.out)
    dump_json(signal_to_json(sig), sig_path)
    dump_json(ensemble_to_json(e), ens_path)
    dump_json(measurements_to_json(b), meas_path)
    print(f"wrote {sig_path}, {ens_path}, {meas_path}")
    return EXIT_OK


def _load_instance(directory: Path):
    sig_path, ens_path, meas_path = _instance_paths(directory)
    for p in (sig_path, ens_path, meas_path):
        if not p.exists():
            raise ValueError(f"missing instance file: {p}")
    sig = signal_from_json(load_json(sig_path))
    e = ensemble_from_json(load_json(ens_path))
    b = measurements_from_json(load_json(meas_path))
    if sig.dim != e.dim or b.shape != (e.m,):
        raise ValueError("instance files are mutually inconsistent")
    return sig, e, b


def cmd_recover(args) -> int:
    sig, e, b = _load_instance(args.dir)
    lams = lambda_values(args.lambda_rule, e.m, e.dim)
    deduped = list(dict.fromkeys(lams))
    if len(deduped) != len(lams):
        print("warning: duplicate lambda values removed from sweep", file=sys.stderr)
    cfg = _solver_config(args)
    records = [
        run_recovery(sig, e, b, lam, cfg, args.tol, seed=args.seed) for lam in deduped
    ]
    args.out.mkdir(parents=True, exist_ok=True)
    if args.as_json:
        path = args.out / "records.json"
        dump_json([asdict(r) for r in records], path)
    else:
        path = args.out / "records.csv"
        path.write_text(records_to_csv(records))
    best = min(records, key=lambda r: r.rel_error)
    print(
        f"best lambda {best.lam:g}: rel_error {best.rel_error:.3e} "
        f"({'success' if best.success else 'failure'}); wrote {path}"
    )
    return EXIT_OK


def cmd_certify(args) -> int:
    sig, e, _ = _load_instance(args.dir)
    ctx = SubspaceContext.from_signal(sig)
    l = num_groups(e.dim)
    if l > e.m:
        raise InfeasibleGrouping(
            f"need at least {l} vectors for {l} golfing groups, have m={e.m}"
        )
    if e.m // l < args.C1 * ctx.k:
        print(
            f"warning: smallest group size {e.m // l} is below C1*k = "
            f"{args.C1 * ctx.k}; certificate bounds are unlikely to hold",
            file=sys.stderr,
        )
    lam = args.lam if args.lam is not None else math.sqrt(ctx.k) * sig.norm1() + 2.0
    cert = golfing_construct(e, ctx, lam)
    report = verify_certificate(cert, ctx, lam, args.C)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "certificate_report.json"
    dump_json(
        report.to_json(
            n=e.dim, k=ctx.k, m=e.m, lam=lam, C=args.C, C1=args.C1,
            groups=l, ensemble_seed=e.seed, schema_version=SCHEMA_VERSION,
            residual_norm=cert.residual_norm,
        ),
        path,
    )
    status = "all passed" if report.all_passed else "FAILED"
    print(f"certificate bounds {list(report.passed)} ({status}); wrote {path}")
    return EXIT_OK


DEFAULT_LEMMA_SUITE = {
    "L1_TRACE_SANDWICH": {"n": 40, "k": 4, "m": 600, "trials": 200},
    "LOWRANK_LOWER": {"n": 40, "k": 4, "m": 600, "trials": 200},
    "L1_UPPER": {"n": 50, "m": 500, "trials": 200},
    "TRUNCATED_MOMENT": {"n": 30, "m": 3000, "trials": 50, "epsilon": 0.15},
    "CHI2_TAIL": {"N": 140, "m1": 40, "trials": 1000000},
    "E0_EVENT": {"n": 50, "k": 5, "m": 20, "trials": 2000},
}

_CHECK_RUNNERS = {
    "L1_TRACE_SANDWICH": check_l1_trace_sandwich,
    "LOWRANK_LOWER": check_lowrank_lower,
    "L1_UPPER": check_l1_upper,
    "TRUNCATED_MOMENT": check_truncated_moment,
    "CHI2_TAIL": check_chi2_tail,
    "E0_EVENT": check_E0_event,
}


def cmd_verify_lemmas(args) -> int:
    suite = dict(DEFAULT_LEMMA_SUITE)
    if args.config is not None:
        overrides = load_json(args.config)
        for key, params in overrides.items():
            if key not in _CHECK_RUNNERS:
                raise ValueError(f"unknown check id {key!r}")
            suite[key] = {**suite.get(key, {}), **params}
    rows = []
    for key, params in suite.items():
        runner = _CHECK_RUNNERS[key]
        t0 = time.perf_counter()
        res = runner(seed=args.seed, **params)
        elapsed_ms = int(round(1000.0 * (time.perf_counter() - t0)))
        rows.append((res, elapsed_ms))
        print(
            f"{key}: {res.violations}/{res.trials} violations, "
            f"worst_ratio {res.worst_ratio:.4g} ({elapsed_ms} ms)"
        )
    args.out.mkdir(parents=True, exist_ok=True)
    if args.as_json:
        path = args.out / "lemma_checks.json"
        dump_json([r.to_json_record() for r, _ in rows], path)
    else:
        path = args.out / "lemma_checks.csv"
        path.write_text(lemma_results_to_csv(rows))
    print(f"wrote {path}")
    return EXIT_OK


def _int_grid(text: str) -> list[int]:
    vals = [int(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValueError("empty grid")
    return vals


def cmd_phase_diagram(args) -> int:
    cfg = _solver_config(args)
    pd = phase_diagram(
        n=args.n,
        k_grid=_int_grid(args.k_grid),
        m_grid=_int_grid(args.m_grid),
        trials=args.trials,
        lambda_rule=args.lambda_rule,
        seed=args.seed,
        cfg=cfg,
        success_tol=args.tol,
        budget=args.budget,
        threads=args.threads,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "phase_diagram.csv"
    path.write_text(phase_to_csv(pd, args.n))
    for ki, k in enumerate(pd.k_grid):
        rates = " ".join(f"{r:.2f}" for r in pd.success_rate[ki])
        print(f"k={k}: {rates}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.x_file is not None:
        sig = signal_from_json(load_json(args.x_file))
    else:
        if args.k is None or args.n is None:
            raise ValueError("provide --x-file or both --k and --n")
        sig = make_signal(args.n, args.k, args.signal_kind, args.seed)
    cb = converse_bound(sig)
    obj = cb.to_json()
    obj.update({"n": sig.dim, "k": sig.k, "schema_version": SCHEMA_VERSION})
    text = json.dumps(obj, indent=2, sort_keys=True)
    print(text)
    if args.out != Path("."):
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "bound.json").write_text(text + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparselift",
        description="Sparse phase retrieval via l1+trace semidefinite programming",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a signal/ensemble/measurement instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--signal-kind", choices=["flat", "gaussian-normalized"], default="flat")
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("recover", help="solve the program over a lambda sweep")
    p.add_argument("--dir", type=Path, default=Path("."), help="instance directory")
    p.add_argument("--lambda-rule", default="default",
                   help="default | auto[:C0] | fixed:<v> | list:<v1,v2,...>")
    p.add_argument("--tol", type=float, default=1e-3, help="relative success tolerance")
    _solver_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("certify", help="build and verify a dual certificate")
    p.add_argument("--dir", type=Path, default=Path("."), help="instance directory")
    p.add_argument("--C", type=float, default=2.0, help="entrywise-bound constant")
    p.add_argument("--C1", type=float, default=20.0, help="group size per sparsity")
    p.add_argument("--lam", type=float, default=None,
                   help="trace weight (default: sqrt(k)*||x||_1 + 2)")
    _add_common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify-lemmas", help="run the concentration-check suite")
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file overriding per-check parameters")
    _add_common(p)
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("phase-diagram", help="success-rate sweep over a (k, m) grid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k-grid", required=True, help="comma-separated sparsity values")
    p.add_argument("--m-grid", required=True, help="comma-separated measurement counts")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--lambda-rule", default="auto")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--budget", type=float, default=5e8,
                   help="cap on cells*trials*max_iter")
    _solver_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("bound", help="evaluate the converse measurement bound")
    p.add_argument("--x-file", type=Path, default=None, help="signal JSON file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--signal-kind", choices=["flat", "gaussian-normalized"], default="flat")
    _add_common(p)
    p.set_defaults(func=cmd_bound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InfeasibleGrouping, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
