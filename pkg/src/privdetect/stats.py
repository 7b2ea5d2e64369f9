"""Two-sample statistics used as trajectory features."""

from __future__ import annotations

import itertools
import math

import numpy as np

# Largest pooled sample size for which the exact permutation p-value is used.
EXACT_MAX_N = 12


class UndefinedEffectSize(ValueError):
    """Pooled standard deviation is zero, so Cohen's d is undefined."""


def midranks(values) -> np.ndarray:
    """1-based ranks with ties assigned the mean of the ranks they span."""
    values = np.asarray(values, dtype=float)
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    starts = np.cumsum(counts) - counts
    return (starts + (counts + 1) / 2.0)[inverse.reshape(-1)]


def _tie_term(ranks: np.ndarray) -> float:
    _, counts = np.unique(ranks, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def _exact_p(ranks: np.ndarray, n_a: int, u: float) -> float:
    n = len(ranks)
    offset = n_a * (n_a + 1) / 2.0
    mu = n_a * (n - n_a) / 2.0
    observed = abs(u - mu)
    extreme = 0
    total = 0
    for combo in itertools.combinations(range(n), n_a):
        u_k = ranks[list(combo)].sum() - offset
        total += 1
        if abs(u_k - mu) >= observed - 1e-9:
            extreme += 1
    return extreme / total


def mann_whitney_u(a, b, exact: bool | None = None) -> tuple[float, float]:
    """Two-sided Mann-Whitney U test.

    Returns ``(U, p)`` where U is the statistic of ``a``. The p-value is
    exact (permutation distribution of the observed midranks) when the pooled
    size is at most 12, otherwise the tie-corrected normal approximation with
    continuity correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n_a, n_b = len(a), len(b)
    if n_a < 1 or n_b < 1:
        raise ValueError("both samples must be non-empty")
    ranks = midranks(np.concatenate([a, b]))
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    n = n_a + n_b
    if exact is None:
        exact = n <= EXACT_MAX_N
    if exact:
        return u, _exact_p(ranks, n_a, u)

    mu = n_a * n_b / 2.0
    var = n_a * n_b / 12.0 * ((n + 1) - _tie_term(ranks) / (n * (n - 1)))
    if var <= 0:
        return u, 1.0
    z = (abs(u - mu) - 0.5) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))  # = 2 * normal sf(z)
    return u, min(1.0, max(0.0, p))


def cohens_d(a, b) -> float:
    """Standardized mean difference of ``a`` minus ``b`` with pooled SD."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n_a, n_b = len(a), len(b)
    if n_a < 2 or n_b < 2:
        raise ValueError("Cohen's d needs at least two observations per sample")
    pooled = ((n_a - 1) * a.var(ddof=1) + (n_b - 1) * b.var(ddof=1)) / (n_a + n_b - 2)
    if pooled <= 0:
        raise UndefinedEffectSize("pooled variance is zero")
    return float((a.mean() - b.mean()) / math.sqrt(pooled))
