"""Tabular Markov decision process: representation, validation, the exact
hard-max solver used as an oracle throughout the test-suite, and the
Boltzmann action model.

The convention for rewards follows the successor-state form of the Bellman
optimality equation:

    Q*(s, a) = sum_{s'} P[s, a, s'] * (r(s') + gamma * max_{a'} Q*(s', a'))

i.e. the reward is collected at the state the transition lands in.  Some of
the inverse-RL literature instead uses r(s); users porting reward tables
from such code should shift them accordingly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .exceptions import ConvergenceError, ValidationError

DEFAULT_THRESHOLD = 1e-6
DEFAULT_MAX_ITERATIONS = 10_000

#: Stochasticity tolerance for transition rows.
ROW_SUM_ATOL = 1e-9


@dataclass(frozen=True)
class TabularMDP:
    """A finite MDP with dense transitions.

    ``transitions[s, a, s']`` is the probability of landing in ``s'`` after
    taking action ``a`` in state ``s``.  Rows are kept dense; the grids this
    package targets have at most a few hundred states.
    """

    n_states: int
    n_actions: int
    transitions: np.ndarray
    discount: float

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.transitions, dtype=np.float64))
        object.__setattr__(self, "transitions", p)


@dataclass
class SolveResult:
    """Converged value tables from a Bellman solve.

    ``v`` has shape (n_states,), ``q`` has shape (n_states, n_actions).
    ``final_residual`` is the last sup-norm difference between successive
    value iterates; ``clamp_events`` counts pnorm floor clamps during the
    solve (always 0 for exact and gsoft solves).
    """

    v: np.ndarray
    q: np.ndarray
    iterations: int
    final_residual: float
    clamp_events: int = 0

    def to_json(self) -> dict:
        return {
            "v": self.v.tolist(),
            "q": self.q.tolist(),
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "clamp_events": self.clamp_events,
        }


def validate_mdp(mdp: TabularMDP) -> TabularMDP:
    """Check the structural invariants and return the MDP unchanged.

    Raises :class:`ValidationError` naming the first offending row when a
    transition row is not a probability distribution, or when the discount
    is outside [0, 1).
    """
    if mdp.n_states < 1 or mdp.n_actions < 1:
        raise ValidationError("n_states and n_actions must be positive")
    p = mdp.transitions
    if p.shape != (mdp.n_states, mdp.n_actions, mdp.n_states):
        raise ValidationError(
            f"transitions shape {p.shape} does not match "
            f"(n_states, n_actions, n_states) = "
            f"({mdp.n_states}, {mdp.n_actions}, {mdp.n_states})"
        )
    if not np.all(np.isfinite(p)):
        raise ValidationError("transitions contain non-finite entries")
    if np.any(p < 0.0) or np.any(p > 1.0):
        s, a, _ = np.unravel_index(int(np.argmin(p)), p.shape)
        raise ValidationError(f"transition probability outside [0, 1] at state {s}, action {a}")
    row_sums = p.sum(axis=2)
    bad = np.abs(row_sums - 1.0) > ROW_SUM_ATOL
    if np.any(bad):
        s, a = np.argwhere(bad)[0]
        raise ValidationError(
            f"transition row for state {s}, action {a} sums to "
            f"{row_sums[s, a]:.12g}, expected 1"
        )
    if not (0.0 <= mdp.discount < 1.0):
        raise ValidationError(f"discount must lie in [0, 1), got {mdp.discount}")
    return mdp


def exact_value_iteration(
    mdp: TabularMDP,
    rewards: np.ndarray,
    threshold: float = DEFAULT_THRESHOLD,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    v0: np.ndarray | None = None,
) -> SolveResult:
    """Solve the hard-max Bellman optimality equation by synchronous sweeps.

    Iterates V until successive iterates differ by at most ``threshold`` in
    sup norm, then assembles Q from the converged V and re-derives
    V = max_a Q so the returned tables satisfy the optimality identity
    exactly.
    """
    r = _check_rewards(mdp, rewards)
    if threshold <= 0:
        raise ValidationError("threshold must be positive")
    v_start = np.zeros(mdp.n_states) if v0 is None else np.asarray(v0, dtype=np.float64)
    v, iterations, residual = kernels.exact_vi(
        mdp.transitions, r, mdp.discount, threshold, max_iterations, v_start
    )
    _check_converged(residual, threshold, iterations, "exact value iteration")
    q = backup(mdp, r, v)
    v_final = q.max(axis=1)
    # One extra synchronous backup: contraction keeps the residual under the
    # threshold and makes v == q.max(axis=1) hold exactly.
    final_residual = float(np.abs(v_final - v).max())
    return SolveResult(v=v_final, q=q, iterations=iterations + 1, final_residual=final_residual)


def backup(mdp: TabularMDP, rewards: np.ndarray, v: np.ndarray) -> np.ndarray:
    """One Bellman backup of a state-value table into a Q table."""
    p2 = mdp.transitions.reshape(mdp.n_states * mdp.n_actions, mdp.n_states)
    return (p2 @ (rewards + mdp.discount * v)).reshape(mdp.n_states, mdp.n_actions)


def greedy_policy(q: np.ndarray) -> np.ndarray:
    """Greedy action per state; ties break to the lowest action index."""
    return np.argmax(q, axis=1)


def boltzmann_policy(q: np.ndarray, beta: float) -> np.ndarray:
    """Action distribution proportional to exp(beta * Q), row per state.

    Computed with a per-row max shift so large Q values cannot overflow.
    """
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    q = np.asarray(q, dtype=np.float64)
    if not np.all(np.isfinite(q)):
        raise ValidationError("Q table contains non-finite entries")
    e = np.exp(beta * (q - q.max(axis=1)[:, None]))
    return e / e.sum(axis=1)[:, None]


def sample_next_state(mdp: TabularMDP, state: int, action: int, rng: np.random.Generator) -> int:
    """Draw a successor state by inverse CDF over the transition row."""
    row = mdp.transitions[state, action]
    u = rng.random()
    cdf = np.cumsum(row)
    return int(min(np.searchsorted(cdf, u, side="right"), mdp.n_states - 1))


def mdp_to_json(mdp: TabularMDP) -> dict:
    return {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "discount": mdp.discount,
        "transitions": mdp.transitions.tolist(),
    }


def mdp_from_json(doc: dict) -> TabularMDP:
    mdp = TabularMDP(
        n_states=int(doc["n_states"]),
        n_actions=int(doc["n_actions"]),
        transitions=np.asarray(doc["transitions"], dtype=np.float64),
        discount=float(doc["discount"]),
    )
    return validate_mdp(mdp)


def save_mdp(mdp: TabularMDP, path) -> None:
    with open(path, "w") as fh:
        json.dump(mdp_to_json(mdp), fh)


def load_mdp(path) -> TabularMDP:
    with open(path) as fh:
        return mdp_from_json(json.load(fh))


def _check_rewards(mdp: TabularMDP, rewards) -> np.ndarray:
    r = np.asarray(rewards, dtype=np.float64)
    if r.shape != (mdp.n_states,):
        raise ValidationError(f"reward table shape {r.shape} != ({mdp.n_states},)")
    if not np.all(np.isfinite(r)):
        raise ValidationError("reward table contains non-finite entries")
    return r


def _check_converged(residual: float, threshold: float, iterations: int, label: str) -> None:
    if residual <= threshold:
        return
    if not np.isfinite(residual) or residual >= 1e15:
        raise ConvergenceError(f"{label} diverged after {iterations} sweeps (residual {residual:.3g})")
    raise ConvergenceError(
        f"{label} did not converge within {iterations} sweeps "
        f"(residual {residual:.3g} > threshold {threshold:.3g})"
    )
