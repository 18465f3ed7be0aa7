"""Online reward estimation from a stream of observed actions.

One observation is a (state, chosen action) pair.  The learner explains it
with a Boltzmann action model over the smoothed optimal Q values,

    P(a | s, theta) = exp(beta * Q(s, a, theta)) / sum_a' exp(beta * Q(s, a', theta)),

and performs one gradient-ascent step on the action's log-likelihood per
observation and per restart.  Multiple independently initialized restarts
run side by side; after every observation the restart with the best running
score is reported.  Nothing about past observations is stored, so memory is
constant in the length of the stream.

The log-likelihood gradient needs dQ/dtheta at the observed state only, so
the per-observation work is: one smoothed value solve (warm-started from the
restart's previous solution), one linear gradient solve, and the reward
model's forward/backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import ConvergenceError, ValidationError
from .mdp import TabularMDP, boltzmann_policy, validate_mdp
from .rewards import RewardModel
from .smoothmax import ApproxSpec
from .solver import approximate_value_iteration, weighted_transition
from .backend import kernels

#: Default parameter scale for fresh linear restarts.  Online ascent moves
#: theta by (learning rate) x (gradient) per observation; starting near zero
#: lets the accumulated signal dominate the random start instead of fighting
#: O(1) initialization noise for the first hundred thousand observations.
LINEAR_INIT_SCALE = 0.01
MLP_INIT_SCALE = 1.0


@dataclass(frozen=True)
class LearnerConfig:
    """Knobs of the online learner.

    ``spec`` picks the smooth-max family and sharpness used for the solves;
    ``beta`` is the action-model confidence; ``grad_solver`` selects how the
    gradient fixed point is solved ('direct' for the linear solve, 'iterate'
    for warm-started synchronous sweeps; both agree to solver precision).
    ``init_scale`` overrides the per-model default parameter scale of fresh
    restarts.
    """

    spec: ApproxSpec = ApproxSpec("gsoft", 100.0)
    beta: float = 1.0
    learning_rate: float = 1e-5
    n_restarts: int = 5
    vi_threshold: float = 1e-6
    grad_threshold: float = 1e-6
    max_iterations: int = 10_000
    grad_solver: str = "direct"
    init_scale: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.beta <= 0 or self.learning_rate < 0:
            raise ValidationError("beta must be positive and learning_rate nonnegative")
        if self.n_restarts < 1:
            raise ValidationError("n_restarts must be at least 1")
        if self.vi_threshold <= 0 or self.grad_threshold <= 0:
            raise ValidationError("solver thresholds must be positive")
        if self.grad_solver not in ("direct", "iterate"):
            raise ValidationError(f"unknown grad_solver {self.grad_solver!r}")


@dataclass(frozen=True)
class Observation:
    """One observed (state, chosen action) pair, ``t`` is its ordinal."""

    s: int
    a: int
    t: int = 0


class ObserveResult(NamedTuple):
    best_reward: np.ndarray
    best_score: float
    best_restart: int


@dataclass
class RestartState:
    """Everything one restart carries between observations."""

    theta: np.ndarray
    rng: np.random.Generator
    score: float = 0.0
    rewards: np.ndarray | None = None
    jac: np.ndarray | None = None
    v: np.ndarray | None = None
    q: np.ndarray | None = None
    dv: np.ndarray | None = None  # warm start for the iterative gradient solver

    def nbytes(self) -> int:
        total = 0
        for arr in (self.theta, self.rewards, self.jac, self.v, self.q, self.dv):
            if arr is not None:
                total += arr.nbytes
        return total


def action_log_likelihood(q: np.ndarray, s: int, a: int, beta: float) -> float:
    """log P(a | s) under the Boltzmann model, computed with a max shift."""
    row = beta * np.asarray(q, dtype=np.float64)[s]
    m = row.max()
    return float(row[a] - m - np.log(np.sum(np.exp(row - m))))


def log_likelihood_gradient(
    q: np.ndarray, dq: np.ndarray, s: int, a: int, beta: float
) -> np.ndarray:
    """Gradient of the observed action's log-likelihood w.r.t. theta.

    ``dq`` is the full (n_states, n_actions, n_params) tensor from
    :func:`onlineirl.solver.bellman_gradient_iteration`.
    """
    q = np.asarray(q, dtype=np.float64)
    dq = np.asarray(dq, dtype=np.float64)
    if dq.shape[:2] != q.shape:
        raise ValidationError(f"dq shape {dq.shape} does not extend q shape {q.shape}")
    pi = boltzmann_policy(q, beta)[s]
    return beta * (dq[s, a] - pi @ dq[s])


def select_best(scores) -> int:
    """Index of the highest score; ties break to the lowest index."""
    return int(np.argmax(scores))


class OnlineRewardLearner:
    """Multi-restart online gradient-ascent reward estimator.

    Construct once per environment with the MDP, the state feature matrix,
    a :class:`RewardModel` and a :class:`LearnerConfig`, then feed
    observations through :meth:`observe`.  The learner is deterministic for
    a fixed config seed.
    """

    def __init__(
        self,
        mdp: TabularMDP,
        features: np.ndarray,
        model: RewardModel,
        config: LearnerConfig,
    ):
        self.mdp = validate_mdp(mdp)
        self.features = np.asarray(features, dtype=np.float64)
        if self.features.shape != (mdp.n_states, model.n_features):
            raise ValidationError(
                f"feature matrix shape {self.features.shape} != "
                f"({mdp.n_states}, {model.n_features})"
            )
        self.model = model
        self.config = config
        self.t = 0
        self.stats = {"vi_sweeps": 0, "grad_sweeps": 0, "grad_solves": 0, "clamp_events": 0}
        scale = config.init_scale
        if scale is None:
            scale = LINEAR_INIT_SCALE if model.kind == "linear" else MLP_INIT_SCALE
        self.restarts = []
        for seq in np.random.SeedSequence(config.seed).spawn(config.n_restarts):
            rng = np.random.default_rng(seq)
            self.restarts.append(RestartState(theta=model.init_params(rng, scale=scale), rng=rng))

    def observe(self, obs: Observation) -> ObserveResult:
        """Process one observation: ascend every restart, return the best.

        Per restart: compute the log-likelihood gradient at the current
        parameters, take one ascent step, re-solve at the new parameters and
        fold the new log-likelihood into the restart's running mean score.
        The returned reward table belongs to the restart with the highest
        score (ties to the lowest index).
        """
        if not (0 <= obs.s < self.mdp.n_states and 0 <= obs.a < self.mdp.n_actions):
            raise ValidationError(f"observation ({obs.s}, {obs.a}) out of range")
        cfg = self.config
        self.t += 1
        for i, restart in enumerate(self.restarts):
            try:
                self._step(restart, obs)
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"restart {i}, observation {self.t}: {exc}"
                ) from exc
            likelihood = action_log_likelihood(restart.q, obs.s, obs.a, cfg.beta)
            restart.score += (likelihood - restart.score) / self.t
        best = select_best([r.score for r in self.restarts])
        chosen = self.restarts[best]
        return ObserveResult(chosen.rewards.copy(), chosen.score, best)

    def _step(self, restart: RestartState, obs: Observation) -> None:
        cfg = self.config
        if restart.q is None:
            self._solve(restart)
        if cfg.learning_rate > 0.0:
            gradient, wp = self._likelihood_gradient(restart, obs)
            restart.theta = restart.theta + cfg.learning_rate * gradient
            new_rewards = self.model.reward(restart.theta, self.features)
            # First-order prediction of the value response to the reward
            # change, with the smooth-max weights frozen: dv solves
            # (I - gamma * W_P) dv = W_P dr.  The value iteration then starts
            # within its second-order error instead of one theta-step away.
            delta_r = new_rewards - restart.rewards
            restart.v = restart.v + np.linalg.solve(
                np.eye(self.mdp.n_states) - self.mdp.discount * wp, wp @ delta_r
            )
            self._solve(restart, rewards=new_rewards)

    def _solve(self, restart: RestartState, rewards: np.ndarray | None = None) -> None:
        """Refresh the restart's reward and value tables.

        The full reward Jacobian is only materialized for the iterative
        gradient solver; the direct solver contracts it on the fly.
        """
        cfg = self.config
        restart.rewards = (
            self.model.reward(restart.theta, self.features) if rewards is None else rewards
        )
        if cfg.grad_solver == "iterate":
            restart.jac = self.model.jacobian(restart.theta, self.features)
        result = approximate_value_iteration(
            self.mdp,
            restart.rewards,
            cfg.spec,
            threshold=cfg.vi_threshold,
            max_iterations=cfg.max_iterations,
            v0=restart.v,
        )
        restart.v, restart.q = result.v, result.q
        self.stats["vi_sweeps"] += result.iterations
        self.stats["clamp_events"] += result.clamp_events

    def _likelihood_gradient(
        self, restart: RestartState, obs: Observation
    ) -> tuple[np.ndarray, np.ndarray]:
        """Gradient of log P(a | s, theta) at the restart's current theta.

        Only the observed state's dQ row enters the gradient, so instead of
        materializing the full dQ tensor this propagates the action-residual
        vector through the (frozen-weight) gradient fixed point:

            grad = beta * (u + gamma * z)^T J,
            u = P[s]^T (e_a - pi[s]),
            z = W_P^T (I - gamma * W_P)^-T u      (direct solver)

        which equals e_a - pi[s] contracted with P[s] (J + gamma dV).
        Returns the gradient together with the weighted transition matrix
        W_P, which the caller reuses to warm-start the next value solve.
        """
        cfg = self.config
        mdp = self.mdp
        pi = boltzmann_policy(restart.q, cfg.beta)[obs.s]
        c = -pi
        c[obs.a] += 1.0
        wp = weighted_transition(mdp, restart.q, cfg.spec)
        u = mdp.transitions[obs.s].T @ c
        if cfg.grad_solver == "direct":
            y = np.linalg.solve((np.eye(mdp.n_states) - mdp.discount * wp).T, u)
            self.stats["grad_solves"] += 1
            state_weights = u + mdp.discount * (wp.T @ y)
            return cfg.beta * self.model.vjp(restart.theta, self.features, state_weights), wp
        dv0 = restart.dv if restart.dv is not None else np.zeros_like(restart.jac)
        dv, iterations, residual = kernels.grad_vi(
            wp, wp @ restart.jac, mdp.discount, cfg.grad_threshold, cfg.max_iterations, dv0
        )
        if residual > cfg.grad_threshold:
            raise ConvergenceError(
                f"gradient iteration stalled (residual {residual:.3g} after {iterations} sweeps)"
            )
        restart.dv = dv
        self.stats["grad_sweeps"] += iterations
        dq_row = mdp.transitions[obs.s] @ (restart.jac + mdp.discount * dv)
        return cfg.beta * (c @ dq_row), wp

    def best(self) -> ObserveResult:
        """Current best restart without processing a new observation."""
        scores = [r.score for r in self.restarts]
        best = select_best(scores)
        chosen = self.restarts[best]
        if chosen.rewards is None:
            self._solve(chosen)
        return ObserveResult(chosen.rewards.copy(), chosen.score, best)

    def state_nbytes(self) -> int:
        """Bytes of persistent per-restart state (memory-contract probe)."""
        return sum(r.nbytes() for r in self.restarts)
