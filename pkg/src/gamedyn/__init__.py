"""Continuous-time learning dynamics on the probability simplex.

Simulate the replicator family, projection dynamics, their higher-order
variants and classical evolutionary dynamics against time-varying payoffs or
linear population games, and measure regret and passivity along the way.
"""

from .dynamics import (
    ALL_MODELS,
    ModelKind,
    ModelParams,
    ModelState,
    init_state,
    is_rest_point,
    read_strategy,
    strategy_velocity,
    vector_field,
)
from .integrator import DEFAULT_BACKEND, IntegratorConfig, Trajectory, convergence_check, integrate
from .payoffs import (
    MatrixGame,
    PayoffSignal,
    constant_signal,
    contractivity_report,
    eval_payoff,
    eval_payoff_derivative,
    example1_signal,
    example2_signal,
    good_rps,
    random_smooth_signal,
    standard_rps,
)
from .simplex import (
    IntegrationDiverged,
    project_simplex,
    project_tangent_cone,
    project_tangent_space,
    safeguard,
    softmax,
    vertex,
)

__version__ = "0.1.0"
