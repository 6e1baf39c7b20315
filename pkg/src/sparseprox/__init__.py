"""Sparse-optimization toolkit: exact-penalty solvers with stationarity certificates."""

from .design import DesignMatrix
from .losses import (
    LeastSquaresLoss,
    LipschitzEstimate,
    LogisticLoss,
    RobustLeastSquaresLoss,
    lipschitz_upper_bound,
    logistic_value_grad,
    ls_value_grad,
    robust_ls_value_grad,
)
from .objectives import (
    CompositeObjective,
    PositivePartPenalty,
    TwoBlockObjective,
    corner_1d_problem,
)
from .penalties import (
    ExactPenaltyBound,
    IndicatorL0Ball,
    SignPattern,
    TopKPenalty,
    active_set_enumerate,
    exact_penalty_bound,
    project_l0_ball,
    prox_top_k_penalty,
    soft_threshold,
    t_k_value,
    top_k_norm,
    top_k_subgradient,
)
from .solvers import (
    IterateTrace,
    SolverConfig,
    SolverResult,
    default_config,
    gist_solve,
    gpalm_solve,
    nepdca_solve,
    palm_solve,
    pdca_solve,
    pdcae_proj_solve,
    pdcae_solve,
    pgm_solve,
)
from .stationarity import (
    StationarityReport,
    check_critical,
    check_d_stationary,
    classify,
    classify_blocks,
    prox_residual,
)
from .data_io import (
    Instance,
    RobustInstance,
    add_intercept,
    gen_robust_instance,
    gen_sparse_ls_instance,
    load_instance,
    parse_libsvm,
    perturbed_start,
    save_instance,
    scaled_uniform_start,
    serialize_libsvm,
)

__version__ = "0.1.0"
