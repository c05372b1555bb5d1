"""Sparse robust regression with a zero-norm penalty.

Two solvers for min (1/n)||Ax - b||_1 + (mu/2)||x||^2 + nu ||x||_0 through
its exact concave-capped surrogate: a proximal majorization-minimization
method with dual semismooth Newton-CG inner solves, and an
indefinite-proximal ADMM baseline on the Huber-smoothed form.
"""

from .bench import RunRecord, eps_grid_search, read_csv, run_sweep, run_table1, write_csv
from .data import (
    SyntheticInstance,
    SyntheticSpec,
    gen_covariance,
    gen_true_x,
    load_instance,
    make_instance,
    re_condition_estimate,
    sample_noise,
    save_instance,
    table_sizing,
)
from .estimators import IPADMMRegressor, PMMRegressor
from .ipadmm import ADMMConfig, admm_solve, aug_lagrangian
from .metrics import fp_fn, l2err, loss_value, nnz_approx
from .penalty import (
    PenaltyParams,
    check_local_opt_condition,
    g_rho,
    grad_g_rho,
    moreau_l1,
    phi,
    prox_l1_scaled,
    prox_moreau_l1,
    prox_vartheta,
    prox_weighted_l1_ridge,
    psi_star,
    psi_star_prime,
    surrogate_penalty,
    theta_objective,
    varphi_rho_prime,
    w_rho,
    zero_norm_objective,
)
from .pmm import (
    PMMConfig,
    SolveReport,
    choose_rho,
    default_lambda,
    descent_gap,
    err_k,
    init_x0,
    pmm_solve,
)
from .problem import LibSVMFormatError, ProblemInstance, l1_loss, load_libsvm, residual, spectral_norm_sq
from .sncg import (
    SNCGConfig,
    SubproblemResult,
    SubproblemSpec,
    apply_W,
    cg_solve,
    dual_gradient,
    dual_value,
    jacobian_diagonals,
    solve_subproblem,
)

__version__ = "0.1.0"

__all__ = [
    "ADMMConfig",
    "IPADMMRegressor",
    "LibSVMFormatError",
    "PMMConfig",
    "PMMRegressor",
    "PenaltyParams",
    "ProblemInstance",
    "RunRecord",
    "SNCGConfig",
    "SolveReport",
    "SubproblemResult",
    "SubproblemSpec",
    "SyntheticInstance",
    "SyntheticSpec",
    "admm_solve",
    "apply_W",
    "aug_lagrangian",
    "cg_solve",
    "check_local_opt_condition",
    "choose_rho",
    "default_lambda",
    "descent_gap",
    "dual_gradient",
    "dual_value",
    "eps_grid_search",
    "err_k",
    "fp_fn",
    "g_rho",
    "gen_covariance",
    "gen_true_x",
    "grad_g_rho",
    "init_x0",
    "jacobian_diagonals",
    "l1_loss",
    "l2err",
    "load_instance",
    "load_libsvm",
    "loss_value",
    "make_instance",
    "moreau_l1",
    "nnz_approx",
    "phi",
    "pmm_solve",
    "prox_l1_scaled",
    "prox_moreau_l1",
    "prox_vartheta",
    "prox_weighted_l1_ridge",
    "psi_star",
    "psi_star_prime",
    "re_condition_estimate",
    "read_csv",
    "residual",
    "run_sweep",
    "run_table1",
    "sample_noise",
    "save_instance",
    "solve_subproblem",
    "spectral_norm_sq",
    "surrogate_penalty",
    "table_sizing",
    "theta_objective",
    "varphi_rho_prime",
    "w_rho",
    "write_csv",
    "zero_norm_objective",
]
