"""sparselift: compressive phase retrieval of sparse signals.

Recovers a k-sparse signal x from m < n quadratic Gaussian measurements
b_j = <z_j, x>^2 by solving the lifted semidefinite program

    minimize ||X||_1 + lam * Tr(X)   s.t.  z_j^T X z_j = b_j,  X PSD,

and provides the analysis toolkit around it: dual-certificate construction
by the golfing scheme, Monte Carlo verification of the concentration
bounds the recovery guarantee rests on, the converse measurement bound,
and a brute-force injectivity oracle.
"""

from .linalg import (
    MatrixNorms,
    NumericalFailure,
    Spectrum,
    inner,
    norms,
    psd_project,
    soft_threshold,
    sym_eigen,
    symmetrize,
)
from .measurement import (
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
from .solver import (
    RecoveredSignal,
    SolveResult,
    SolverConfig,
    affine_project,
    check_success,
    extract_signal,
    objective_value,
    solve_trace_l1,
)
from .certificate import (
    Certificate,
    CertificateReport,
    InfeasibleGrouping,
    LambdaWindow,
    TruncatedMoments,
    f_operator,
    golfing_construct,
    lambda_window,
    num_groups,
    partition_groups,
    truncated_fourth_moment,
    truncated_moments,
    truncated_second_moment,
    verify_certificate,
)
from .verify import (
    BudgetExceeded,
    ConverseBound,
    LemmaCheckResult,
    LemmaId,
    NonoptimalityReport,
    OracleResult,
    check_E0_event,
    check_chi2_tail,
    check_l1_trace_sandwich,
    check_l1_upper,
    check_lowrank_lower,
    check_truncated_moment,
    converse_bound,
    empirical_nonoptimality,
    injectivity_oracle,
)
from .experiment import (
    ExperimentRecord,
    PhaseDiagram,
    lambda_values,
    make_signal,
    phase_diagram,
    run_recovery,
)
from .rng import derive_seed, generator, normal_matrix, standard_normal

__version__ = "0.1.0"
