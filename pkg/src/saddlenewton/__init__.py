"""Second-order extragradient solvers for unconstrained convex-concave
min-max problems, with cubic subproblem machinery, subsampled Hessians,
first-order baselines, and a benchmark harness."""

__version__ = "0.1.0"

from ._kernels import kernel_backend
from .core import (
    GapConfig,
    GapResult,
    JointPoint,
    SaddleProblem,
    average_iterates,
    operator_jacobian,
    operator_value,
    restricted_gap,
    weighted_regret,
)
from .problems import (
    AUCProblem,
    CubicBilinearProblem,
    FiniteSumProblem,
    LibsvmDataset,
    cubic_bilinear_saddle,
    make_auc_problem,
    make_cubic_bilinear,
    make_random_cc_quadratic,
    parse_libsvm,
    scale_features,
)
from .sampling import (
    SamplingPlan,
    nonuniform_probs,
    nonuniform_sample_size,
    per_iteration_delta,
    subsampled_hessian,
    tau_rule,
    uniform_sample_size,
)
from .solvers import (
    SolverConfig,
    SolverResult,
    IterateTrace,
    eg_solve,
    inexact_newton_minmax,
    newton_minmax,
    ogda_solve,
    seg_solve,
    select_lambda,
    sogda_solve,
    subsampled_newton_minmax,
)
from .subproblem import (
    CubicSubproblem,
    SOCPoint,
    SubproblemSolution,
    cubic_prox,
    gmp_iterate,
    gmp_solve,
    model_gradient,
    residual_E,
    residual_jacobian,
    soc_project,
    soc_projection_jacobian,
    solve_cubic_subproblem,
    ssn_solve,
)
