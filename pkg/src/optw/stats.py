"""Gap metric, bootstrap confidence intervals and the one-sided signed-rank test."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

EXACT_MAX_N = 20


class DegenerateBaseline(ValueError):
    pass


class EmptySample(ValueError):
    pass


class TooFewPairs(ValueError):
    pass


def gap(baseline: float, model: float) -> float:
    """Percent gap ``(baseline - model) / baseline * 100``; negative favours the model."""
    if not baseline > 0:
        raise DegenerateBaseline(f"baseline score must be positive, got {baseline}")
    return (baseline - model) / baseline * 100.0


def bootstrap_ci(values: Sequence[float], resamples: int = 10_000, level: float = 0.95,
                 seed: int = 0) -> tuple[float, float]:
    """Percentile interval of the mean, resampling ``values`` with replacement.

    Parameters
    ----------
    values : sequence of float
        Observations, e.g. one gap per instance-region.
    resamples : int
        Number of bootstrap samples.
    level : float
        Two-sided coverage; 0.95 gives the 2.5 and 97.5 percentiles.
    seed : int
        Seed of the resampling stream.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise EmptySample("bootstrap needs at least one value")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(resamples, x.size))
    means = x[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def _average_ranks(a: np.ndarray) -> np.ndarray:
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.size)
    sorted_a = a[order]
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_upper_tail(ranks: np.ndarray, observed: float) -> float:
    """P(W+ >= observed) under the null, by dynamic programming on doubled ranks."""
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts += shifted
    target = int(round(2.0 * observed))
    return float(counts[target:].sum() / 2.0 ** ranks.size)


def wilcoxon_one_sided(a: Sequence[float], b: Sequence[float], exact_max_n: int = EXACT_MAX_N) -> float:
    """p-value for H1: the differences ``a - b`` are centred above zero.

    Zero differences are dropped. Up to ``exact_max_n`` pairs the null
    distribution of W+ is enumerated exactly; above that a normal
    approximation with tie and continuity corrections is used.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("samples must have equal length")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n < 5:
        raise TooFewPairs(f"{n} non-zero differences, need at least 5")
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= exact_max_n:
        return _exact_upper_tail(ranks, w_plus)
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    z = (w_plus - mean - 0.5) / math.sqrt(var)
    return 0.5 * math.erfc(z / math.sqrt(2.0))
