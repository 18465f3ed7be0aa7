"""Online inverse reinforcement learning with differentiable Bellman solvers.

Estimate an agent's reward function one observation at a time: smooth
approximations make the Bellman optimality operator differentiable in the
reward parameters, a fixed-point iteration propagates reward Jacobians into
Q-value gradients, and per-observation gradient ascent on a Boltzmann action
likelihood updates the parameters online.
"""

from .backend import kernel_backend
from .envs import (
    EnvBundle,
    GridSpec,
    ObjectworldSpec,
    generate_observations,
    make_cleaning_home,
    make_env,
    make_gridworld,
    make_objectworld,
)
from .exceptions import ConvergenceError, ValidationError
from .learner import (
    LearnerConfig,
    Observation,
    OnlineRewardLearner,
    action_log_likelihood,
    log_likelihood_gradient,
)
from .mdp import (
    SolveResult,
    TabularMDP,
    boltzmann_policy,
    exact_value_iteration,
    greedy_policy,
    sample_next_state,
    validate_mdp,
)
from .metrics import cleaning_energy_cost, pearson_correlation
from .rewards import RewardModel, model_from_json
from .smoothmax import ApproxSpec, approx_max, approx_max_weights, clamp_event_count
from .solver import GradResult, approximate_value_iteration, bellman_gradient_iteration

__version__ = "0.1.0"

__all__ = [
    "ApproxSpec",
    "ConvergenceError",
    "EnvBundle",
    "GradResult",
    "GridSpec",
    "LearnerConfig",
    "Observation",
    "ObjectworldSpec",
    "OnlineRewardLearner",
    "RewardModel",
    "SolveResult",
    "TabularMDP",
    "ValidationError",
    "action_log_likelihood",
    "approx_max",
    "approx_max_weights",
    "approximate_value_iteration",
    "bellman_gradient_iteration",
    "boltzmann_policy",
    "clamp_event_count",
    "cleaning_energy_cost",
    "exact_value_iteration",
    "generate_observations",
    "greedy_policy",
    "kernel_backend",
    "log_likelihood_gradient",
    "make_cleaning_home",
    "make_env",
    "make_gridworld",
    "make_objectworld",
    "model_from_json",
    "pearson_correlation",
    "sample_next_state",
    "validate_mdp",
]
