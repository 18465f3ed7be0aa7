"""Smooth approximations of the max operator and their derivatives.

Two families are provided, both parameterized by a sharpness k > 0 and both
converging to the true max as k grows:

* ``pnorm``: max(a) ~ (sum_i a_i^k)^(1/k).  Defined for nonnegative inputs;
  entries below a small floor are clamped up to keep the expression defined
  (and the clamps are counted, see :func:`clamp_event_count`).  The value
  always overestimates the true max.
* ``gsoft``: max(a) ~ log(sum_i exp(k * a_i)) / k, the scaled log-sum-exp.
  Defined everywhere, overestimates the true max by at most log(n)/k.

Both are evaluated in a numerically safe form: ``pnorm`` factors out the
largest entry so the powers stay in [0, 1]; ``gsoft`` shifts by the max
before exponentiating.  The derivative vectors returned by
:func:`approx_max_weights` are what a smoothed Bellman backup distributes
across actions.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

#: Entries below this floor are clamped before a pnorm evaluation.
PNORM_FLOOR = 1e-8

KINDS = ("pnorm", "gsoft")
_KIND_CODES = {"pnorm": 0, "gsoft": 1}

_clamp_lock = threading.Lock()
_clamp_events = 0


def record_clamp_events(n: int) -> None:
    """Add ``n`` to the process-wide clamp diagnostic counter."""
    global _clamp_events
    if n:
        with _clamp_lock:
            _clamp_events += int(n)


def clamp_event_count() -> int:
    """Number of pnorm inputs clamped up to the floor since the last reset."""
    with _clamp_lock:
        return _clamp_events


def reset_clamp_events() -> None:
    global _clamp_events
    with _clamp_lock:
        _clamp_events = 0


@dataclass(frozen=True)
class ApproxSpec:
    """Which smooth-max family to use and how sharp it is.

    ``kind`` is one of ``"pnorm"`` or ``"gsoft"``.  ``k`` must be positive;
    pnorm additionally requires k >= 1 (its gap-shrinking behaviour holds
    only there).
    """

    kind: str
    k: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown smooth-max kind {self.kind!r}; expected one of {KINDS}")
        if not np.isfinite(self.k) or self.k <= 0:
            raise ValidationError(f"sharpness k must be positive and finite, got {self.k}")
        if self.kind == "pnorm" and self.k < 1:
            raise ValidationError(f"pnorm requires k >= 1, got {self.k}")

    @property
    def kind_code(self) -> int:
        """Integer tag used at the kernel boundary (0 = pnorm, 1 = gsoft)."""
        return _KIND_CODES[self.kind]


def _as_vector(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError("expected a non-empty 1-d vector of values")
    if not np.all(np.isfinite(v)):
        raise ValidationError("values must be finite")
    return v


def approx_max(values, spec: ApproxSpec) -> float:
    """Smooth upper bound on ``max(values)`` under ``spec``."""
    v = _as_vector(values)
    if spec.kind == "pnorm":
        w, n_clamped = _clamp_pnorm(v)
        record_clamp_events(n_clamped)
        m = w.max()
        return float(m * np.sum((w / m) ** spec.k) ** (1.0 / spec.k))
    m = v.max()
    return float(m + np.log(np.sum(np.exp(spec.k * (v - m)))) / spec.k)


def approx_max_weights(values, spec: ApproxSpec) -> np.ndarray:
    """Gradient of :func:`approx_max` with respect to each input entry.

    For gsoft this is the softmax of ``k * values`` (a probability vector);
    for pnorm it is ``(sum_j a_j^k)^((1-k)/k) * a_i^(k-1)``, evaluated on the
    clamped entries, which is nonnegative but sums to n_eff^(1/k) >= 1.
    """
    v = _as_vector(values)
    if spec.kind == "pnorm":
        w, n_clamped = _clamp_pnorm(v)
        record_clamp_events(n_clamped)
        m = w.max()
        ratios = w / m
        s = np.sum(ratios ** spec.k)
        return ratios ** (spec.k - 1.0) / s ** ((spec.k - 1.0) / spec.k)
    e = np.exp(spec.k * (v - v.max()))
    return e / e.sum()


def smooth_max_rows(t: np.ndarray, spec: ApproxSpec) -> tuple[np.ndarray, int]:
    """Row-wise :func:`approx_max` over a 2-d array.

    Returns the vector of row values and the number of clamped entries
    (always 0 for gsoft).  The caller is responsible for recording clamp
    events; the solver kernels aggregate them per solve.
    """
    if spec.kind == "pnorm":
        clamped = np.maximum(t, PNORM_FLOOR)
        n_clamped = int(np.count_nonzero(t < PNORM_FLOOR))
        m = clamped.max(axis=1)
        vals = m * np.sum((clamped / m[:, None]) ** spec.k, axis=1) ** (1.0 / spec.k)
        return vals, n_clamped
    m = t.max(axis=1)
    vals = m + np.log(np.sum(np.exp(spec.k * (t - m[:, None])), axis=1)) / spec.k
    return vals, 0


def smooth_weight_rows(q: np.ndarray, spec: ApproxSpec) -> tuple[np.ndarray, int]:
    """Row-wise :func:`approx_max_weights` over a 2-d array."""
    if spec.kind == "pnorm":
        clamped = np.maximum(q, PNORM_FLOOR)
        n_clamped = int(np.count_nonzero(q < PNORM_FLOOR))
        m = clamped.max(axis=1)
        ratios = clamped / m[:, None]
        s = np.sum(ratios ** spec.k, axis=1)
        return ratios ** (spec.k - 1.0) / s[:, None] ** ((spec.k - 1.0) / spec.k), n_clamped
    e = np.exp(spec.k * (q - q.max(axis=1)[:, None]))
    return e / e.sum(axis=1)[:, None], 0


def _clamp_pnorm(v: np.ndarray) -> tuple[np.ndarray, int]:
    n_clamped = int(np.count_nonzero(v < PNORM_FLOOR))
    return np.maximum(v, PNORM_FLOOR), n_clamped
