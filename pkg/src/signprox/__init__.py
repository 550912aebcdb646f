"""One-bit stochastic proximal-gradient optimization."""

from ._numerics import deterministic_mean, gaussian_matrix, make_rng, sample_categorical, spawn_rngs
from .estimators import ProxGradLasso
from .experiment import (
    ConfigError,
    ExperimentConfig,
    communication_cost,
    parse_config,
    read_trace_csv,
    run_comparison,
    run_experiment,
    write_trace_csv,
)
from .oracles import (
    ExactOracle,
    MinibatchOracle,
    NoiseModel,
    NoisyOracle,
    Problem,
    gradient_mapping,
    linearized_problem,
    noisy_prox_oracle,
    prox_grad_component,
    prox_grad_full,
    prox_grad_minibatch,
    sign,
)
from .problems import (
    LassoInstance,
    PhaseRetrievalInstance,
    make_lasso_instance,
    make_phase_retrieval_instance,
    shepp_logan,
)
from .solvers import (
    DivergenceError,
    Schedule,
    Trace,
    grid_search_step,
    run_pgm_reference,
    run_signprox,
    run_signsgd,
    run_spgm,
)
from .theory import (
    BoundReport,
    estimate_smoothness,
    estimate_variance,
    theorem1_check,
    theorem2_check,
)

__version__ = "0.1.0"
