"""Backtracking gradient descent: line searches, optimizers, adversarial test
functions, mini-batch learning-rate machinery, and diagnostics."""

from .core import (
    BtgdError,
    IterateRecord,
    LineSearchConfig,
    LrFinderFailed,
    NonDescentDirection,
    NonFiniteEvaluation,
    NotASaddle,
    ScalarField,
    StalledLineSearch,
    StopRule,
    Termination,
    Trajectory,
    armijo_holds,
    as_point,
    fd_gradient,
    fd_hessian,
)
from .diagnostics import (
    ConvergenceReport,
    CriticalPointClass,
    CriticalPointKind,
    StabilizationReport,
    classify_critical_point,
    convergence_report,
    detect_stabilization,
    jacobi_eigenvalues,
    projective_dist,
    saddle_basin_fraction,
    saddle_escape_outcomes,
)
from .functions import (
    CORPUS,
    NamedObjective,
    cubic,
    holder,
    l2_regularize,
    linear_perturb,
    make_objective,
    mexican_hat,
    quadratic_form,
    rosenbrock,
    smoothed_abs,
)
from .linesearch import (
    GrowthDirection,
    LineSearchResult,
    backtrack,
    backtrack_direction,
    probe_step_size,
    two_way_backtrack,
    wolfe_holds,
)
from .minibatch import (
    BatchSampler,
    LRFinderReport,
    MiniBatchProblem,
    RescaleMode,
    StuckDetector,
    lr_finder,
    make_least_squares_problem,
    problem_from_json,
    problem_to_json,
    run_mbt_gd,
    run_mbt_mmt,
    run_mbt_nag,
    run_objective_sequence,
)
from .optimizers import (
    Constant,
    DirectionOracle,
    ExplicitSequence,
    MomentumState,
    RobbinsMonro,
    Schedule,
    run_backtracking_gd,
    run_backtracking_mmt,
    run_backtracking_nag,
    run_inexact_backtracking_gd,
    run_mmt,
    run_nag,
    run_scheduled_gd,
    run_simplified_bmmt,
    run_simplified_bnag,
    run_standard_gd,
    run_two_way_gd,
)

__version__ = "0.1.0"
