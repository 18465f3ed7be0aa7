"""Evaluation metrics: reward-recovery accuracy and cleaning energy cost."""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError

#: Minimum per-cell share of a cleaning allocation, to keep ratios defined.
ALLOCATION_FLOOR = 1e-6


def pearson_correlation(a, b) -> float | None:
    """Pearson product-moment correlation of two reward tables.

    Returns ``None`` when either input is constant: the coefficient is
    undefined there, and reporting 0 would fabricate a measurement.  CSV
    writers emit the undefined case as an empty field.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValidationError("inputs must be equal-length vectors of at least 2 entries")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denom == 0.0:
        return None
    return float(np.sum(da * db) / denom)


def _allocation(values: np.ndarray) -> np.ndarray:
    """Shift nonnegative, normalize to sum 1, floor each cell, renormalize."""
    v = values - values.min()
    total = v.sum()
    v = v / total if total > 0 else np.full_like(v, 1.0 / v.size)
    v = np.maximum(v, ALLOCATION_FLOOR)
    return v / v.sum()


def cleaning_energy_cost(belief, true_dirt, free_states=None) -> float:
    """Sweeps of the whole area needed to clean everything, relative to optimal.

    The cleaner allocates its effort proportionally to ``belief``; the dirt
    is distributed as ``true_dirt``.  Cleaning every cell requires covering
    the worst cell fully, so the cost is max_s dirt(s) / allocation(s) after
    both are shifted nonnegative and normalized (with a small floor per cell
    so the ratio stays defined).  Allocating exactly proportionally to the
    dirt is optimal and scores 1.0 exactly; every other belief scores >= 1.
    """
    belief = np.asarray(belief, dtype=np.float64)
    dirt = np.asarray(true_dirt, dtype=np.float64)
    if belief.shape != dirt.shape:
        raise ValidationError("belief and dirt tables must have the same shape")
    if free_states is not None:
        belief = belief[np.asarray(free_states, dtype=np.int64)]
        dirt = dirt[np.asarray(free_states, dtype=np.int64)]
    if np.any(dirt < 0) or dirt.sum() <= 0:
        raise ValidationError("dirt must be nonnegative with a positive total")
    dirt_share = _allocation(dirt)
    effort = _allocation(belief)
    return float(np.max(dirt_share / effort))
