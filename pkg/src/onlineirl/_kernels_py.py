"""Pure-Python (numpy) solver kernels.

These mirror the compiled kernels in ``_kernels.pyx`` function for function;
:mod:`onlineirl.backend` picks one implementation at import time.  Each
kernel runs a full synchronous fixed-point iteration to convergence so the
per-sweep overhead stays out of the callers' inner loops.

Shared conventions:

* sweeps are synchronous (the new table is computed from the old one);
* the residual is the max absolute difference between successive iterates;
* iteration stops once the residual drops to ``threshold`` or the sweep
  budget is exhausted, whichever comes first;
* a residual above ``DIVERGENCE_LIMIT`` (or a non-finite one) stops the
  iteration immediately; callers treat that as divergence.

Return tuples never raise for non-convergence; the wrapping solver decides
how to report it.
"""

from __future__ import annotations

import numpy as np

DIVERGENCE_LIMIT = 1e15

PNORM = 0
GSOFT = 1


def exact_vi(p, r, gamma, threshold, max_iterations, v0, pnorm_floor=1e-8):
    """Hard-max value iteration. Returns (v, iterations, residual)."""
    n_states, n_actions, _ = p.shape
    p2 = p.reshape(n_states * n_actions, n_states)
    v = np.array(v0, dtype=np.float64)
    residual = np.inf
    for it in range(1, max_iterations + 1):
        t = (p2 @ (r + gamma * v)).reshape(n_states, n_actions)
        v_new = t.max(axis=1)
        residual = float(np.abs(v_new - v).max())
        v = v_new
        if residual <= threshold or not residual < DIVERGENCE_LIMIT:
            return v, it, residual
    return v, max_iterations, residual


def approx_vi(p, r, gamma, kind, k, threshold, max_iterations, v0, pnorm_floor=1e-8):
    """Smoothed value iteration. Returns (v, iterations, residual, clamps)."""
    n_states, n_actions, _ = p.shape
    p2 = p.reshape(n_states * n_actions, n_states)
    v = np.array(v0, dtype=np.float64)
    residual = np.inf
    clamps = 0
    for it in range(1, max_iterations + 1):
        t = (p2 @ (r + gamma * v)).reshape(n_states, n_actions)
        if kind == PNORM:
            clamps += int(np.count_nonzero(t < pnorm_floor))
            t = np.maximum(t, pnorm_floor)
            m = t.max(axis=1)
            v_new = m * np.sum((t / m[:, None]) ** k, axis=1) ** (1.0 / k)
        else:
            m = t.max(axis=1)
            v_new = m + np.log(np.sum(np.exp(k * (t - m[:, None])), axis=1)) / k
        residual = float(np.abs(v_new - v).max())
        v = v_new
        if residual <= threshold or not residual < DIVERGENCE_LIMIT:
            return v, it, residual, clamps
    return v, max_iterations, residual, clamps


def grad_vi(a, b, gamma, threshold, max_iterations, dv0):
    """Linear fixed point dv = b + gamma * (a @ dv).

    ``a`` is the weight-combined transition matrix (n_states x n_states) and
    ``b`` the constant term (n_states x n_params).  Returns
    (dv, iterations, residual).
    """
    dv = np.array(dv0, dtype=np.float64)
    residual = np.inf
    for it in range(1, max_iterations + 1):
        dv_new = b + gamma * (a @ dv)
        residual = float(np.abs(dv_new - dv).max())
        dv = dv_new
        if residual <= threshold or not residual < DIVERGENCE_LIMIT:
            return dv, it, residual
    return dv, max_iterations, residual
