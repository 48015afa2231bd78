"""Rank statistics used to compare conditions."""

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import norm, rankdata, tiecorrect

EXACT_MAX_TOTAL = 16
_TOLERANCE = 1e-9


class UMethod(str, Enum):
    AUTO = "auto"
    EXACT = "exact"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    p_value: float
    method: UMethod


def _rank_sum_counts(ranks: np.ndarray, n_a: int) -> np.ndarray:
    """Number of ``n_a``-subsets of ``ranks`` per doubled rank sum.

    Midranks are doubled to make them integers.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    top = int(doubled.sum())
    counts = np.zeros((n_a + 1, top + 1), dtype=np.int64)
    counts[0, 0] = 1
    for r in doubled:
        for k in range(n_a, 0, -1):
            counts[k, r:] += counts[k - 1, : top + 1 - r]
    return counts[n_a]


def _exact_p(ranks: np.ndarray, n_a: int, u_obs: float) -> float:
    """Two-sided p over every assignment of the pooled midranks to the first sample."""
    n = len(ranks)
    mean_u = n_a * (n - n_a) / 2.0
    counts = _rank_sum_counts(ranks, n_a)
    u_values = np.arange(counts.size) / 2.0 - n_a * (n_a + 1) / 2.0
    extreme = np.abs(u_values - mean_u) >= abs(u_obs - mean_u) - _TOLERANCE
    return float(counts[extreme].sum() / counts.sum())


def _asymptotic_p(ranks: np.ndarray, n_a: int, n_b: int, u_obs: float) -> float:
    """Normal approximation with tie and continuity correction."""
    n = n_a + n_b
    sigma = np.sqrt(tiecorrect(ranks) * n_a * n_b * (n + 1) / 12.0)
    if sigma == 0:
        return 1.0
    z = (abs(u_obs - n_a * n_b / 2.0) - 0.5) / sigma
    return float(min(1.0, 2.0 * norm.sf(max(z, 0.0))))


def mann_whitney_u(
    a: Sequence[float], b: Sequence[float], method: UMethod = UMethod.AUTO
) -> MannWhitneyResult:
    """Mann-Whitney U of ``a`` against ``b`` with a two-sided p-value.

    ``AUTO`` enumerates exactly when the pooled size is at most 16 and uses the
    normal approximation otherwise. Identical pooled values give p = 1.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise ValueError("Both samples must be non-empty")
    ranks = rankdata(np.concatenate([x, y]))
    n_a = x.size
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)

    if method == UMethod.AUTO:
        method = UMethod.EXACT if x.size + y.size <= EXACT_MAX_TOTAL else UMethod.ASYMPTOTIC
    if np.all(ranks == ranks[0]):
        return MannWhitneyResult(u, 1.0, method)
    if method == UMethod.EXACT:
        p = _exact_p(ranks, n_a, u)
    else:
        p = _asymptotic_p(ranks, n_a, y.size, u)
    return MannWhitneyResult(u, min(1.0, p), method)


def bonferroni(p_values: Sequence[float], m: int | None = None) -> list[float]:
    """Multiply by the number of comparisons, capped at 1."""
    m = len(p_values) if m is None else m
    if m < len(p_values):
        raise ValueError(f"m={m} is smaller than the {len(p_values)} comparisons")
    return [min(1.0, p * m) for p in p_values]
