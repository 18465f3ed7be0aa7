"""Smoothed Bellman solvers.

:func:`approximate_value_iteration` replaces the hard max over actions with
a smooth approximation (see :mod:`onlineirl.smoothmax`), which makes the
converged Q table differentiable with respect to the reward table.
:func:`bellman_gradient_iteration` then propagates a reward Jacobian through
that smoothed fixed point, yielding dV/dtheta and dQ/dtheta.

The gradient fixed point is linear once the smooth-max weights are frozen
from the converged Q:

    dV = W_P @ (J + gamma * dV)        with  (W_P)[s, s'] = sum_a w[s, a] P[s, a, s']
    dQ[s, a] = sum_{s'} P[s, a, s'] * (J[s'] + gamma * dV[s'])

where w[s] are the smooth-max derivative weights of the Q row at s.  The
default solves it by the same synchronous iteration as the value solve;
``method="direct"`` solves the equivalent linear system instead, which costs
about one sweep and agrees with the iterative answer to solver precision.

A caution on pnorm with small k: the pnorm value overestimates the max by a
multiplicative factor up to n_actions^(1/k), so the smoothed backup stops
being a contraction once gamma * n_actions^(1/k) reaches 1 and the value
iteration genuinely diverges.  This surfaces as a :class:`ConvergenceError`
("diverged"); use a larger k or gsoft in that regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .exceptions import ConvergenceError, ValidationError
from .mdp import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_THRESHOLD,
    SolveResult,
    TabularMDP,
    _check_converged,
    _check_rewards,
    backup,
)
from .smoothmax import PNORM_FLOOR, ApproxSpec, record_clamp_events, smooth_weight_rows


@dataclass
class GradResult:
    """Parameter gradients of a smoothed Bellman solve.

    ``dv`` has shape (n_states, n_params) and ``dq`` has shape
    (n_states, n_actions, n_params).
    """

    dv: np.ndarray
    dq: np.ndarray
    iterations: int
    final_residual: float

    def to_json(self) -> dict:
        return {
            "dv": self.dv.tolist(),
            "dq": self.dq.tolist(),
            "iterations": self.iterations,
            "final_residual": self.final_residual,
        }


def approximate_value_iteration(
    mdp: TabularMDP,
    rewards: np.ndarray,
    spec: ApproxSpec,
    threshold: float = DEFAULT_THRESHOLD,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    v0: np.ndarray | None = None,
) -> SolveResult:
    """Value iteration with the smooth max of ``spec`` replacing the hard max.

    Returns the converged V together with the Q table assembled from it via
    one final backup.  V then satisfies V[s] ~ approx_max(Q[s]) to within the
    convergence threshold.
    """
    r = _check_rewards(mdp, rewards)
    if threshold <= 0:
        raise ValidationError("threshold must be positive")
    v_start = np.zeros(mdp.n_states) if v0 is None else np.asarray(v0, dtype=np.float64)
    v, iterations, residual, clamps = kernels.approx_vi(
        mdp.transitions,
        r,
        mdp.discount,
        spec.kind_code,
        spec.k,
        threshold,
        max_iterations,
        v_start,
        PNORM_FLOOR,
    )
    record_clamp_events(clamps)
    _check_converged(residual, threshold, iterations, f"{spec.kind} value iteration (k={spec.k:g})")
    q = backup(mdp, r, v)
    return SolveResult(v=v, q=q, iterations=iterations, final_residual=residual, clamp_events=clamps)


def weighted_transition(mdp: TabularMDP, q: np.ndarray, spec: ApproxSpec) -> np.ndarray:
    """Transition matrix with actions mixed by the smooth-max weights of Q.

    Returns W_P with W_P[s, s'] = sum_a w[s, a] * P[s, a, s'].  The weights
    are the derivative of the smooth max at the given Q rows; clamp events
    (pnorm only) are recorded on the module counter.
    """
    w, clamps = smooth_weight_rows(np.asarray(q, dtype=np.float64), spec)
    record_clamp_events(clamps)
    return np.einsum("sa,sax->sx", w, mdp.transitions)


def bellman_gradient_iteration(
    mdp: TabularMDP,
    q: np.ndarray,
    reward_jacobian: np.ndarray,
    spec: ApproxSpec,
    threshold: float = DEFAULT_THRESHOLD,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    dv0: np.ndarray | None = None,
    method: str = "iterate",
) -> GradResult:
    """Propagate a reward Jacobian through the smoothed Bellman fixed point.

    ``q`` must come from :func:`approximate_value_iteration` under the same
    ``spec``; its smooth-max weights are computed once and held constant.
    ``reward_jacobian`` has shape (n_states, n_params).  ``method`` selects
    the synchronous iteration (default) or the equivalent direct linear
    solve; the two agree to roughly the iteration threshold.
    """
    q = np.asarray(q, dtype=np.float64)
    jac = np.asarray(reward_jacobian, dtype=np.float64)
    if q.shape != (mdp.n_states, mdp.n_actions):
        raise ValidationError(f"Q shape {q.shape} != ({mdp.n_states}, {mdp.n_actions})")
    if jac.ndim != 2 or jac.shape[0] != mdp.n_states:
        raise ValidationError(
            f"reward Jacobian shape {jac.shape} is not (n_states, n_params)"
        )
    if threshold <= 0:
        raise ValidationError("threshold must be positive")

    wp = weighted_transition(mdp, q, spec)
    b = wp @ jac
    if method == "direct":
        dv = np.linalg.solve(np.eye(mdp.n_states) - mdp.discount * wp, b)
        iterations, residual = 1, 0.0
    elif method == "iterate":
        dv_start = np.zeros_like(jac) if dv0 is None else np.asarray(dv0, dtype=np.float64)
        dv, iterations, residual = kernels.grad_vi(
            wp, b, mdp.discount, threshold, max_iterations, dv_start
        )
        _check_converged(residual, threshold, iterations, f"{spec.kind} gradient iteration")
    else:
        raise ValidationError(f"unknown gradient method {method!r}; use 'iterate' or 'direct'")

    dq = np.einsum("sax,xj->saj", mdp.transitions, jac + mdp.discount * dv)
    return GradResult(dv=dv, dq=dq, iterations=iterations, final_residual=residual)
