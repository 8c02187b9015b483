"""Adaptive trust-region optimization with inexact Hessians and Bregman
geometry, plus a runtime audit layer for every per-iteration guarantee."""

__version__ = "0.1.0"

from .baselines import BaselineConfig, run_baseline, solve_to_high_accuracy
from .bregman import (
    ScalingFunction,
    divergence,
    euclidean_scaling,
    make_entropic_simplex_scaling,
    make_quadratic_scaling,
    random_spd_scaling,
)
from .estimators import (
    BFGS,
    Compressed,
    DFP,
    ExactHessian,
    GaussNewton,
    HessianEstimator,
    HutchinsonDiagonal,
    InexactnessBound,
    LazyUpdates,
    SR1,
    deviation,
)
from .hat import (
    HatConfig,
    IterationRecord,
    RunResult,
    audit_convex_conditions,
    audit_iteration_counts,
    classify_step,
    run,
    schedule,
)
from .objectives import (
    LabeledDataset,
    ObjectiveProblem,
    ProblemConstants,
    fd_gradient,
    fd_hessian,
    load_libsvm,
    make_linear_lsq,
    make_logistic,
    make_nlls,
    make_quadratic,
    make_rosenbrock,
    make_softmax_classifier,
    make_tanh_nlls,
    synthetic_classification,
)
from .subproblem import (
    KktReport,
    SubproblemSolution,
    TrustRegionModel,
    check_kkt,
    solve_general_bregman,
    solve_quadratic_bregman,
)
