"""Small trend-test helpers shared by the experiment suites.

Decay claims are one-sided by nature (error or TV should fall with block
length), so the Kendall test is run with the one-sided "less" alternative;
with only four sweep points the perfect ordering then reaches p = 1/24.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats


def kendall_decreasing(values) -> tuple[float, float]:
    """One-sided Kendall trend test against increasing order; returns
    (tau, p_value) for the alternative 'values decrease'."""
    values = np.asarray(values, dtype=float)
    res = stats.kendalltau(np.arange(values.size), values, alternative="less")
    return float(res.statistic), float(res.pvalue)


def sign_test_fraction_decreasing(before, after) -> float:
    """Paired one-sided sign test p-value for 'after < before' (ties dropped)."""
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    wins = int(np.sum(after < before))
    losses = int(np.sum(after > before))
    n = wins + losses
    if n == 0:
        return 1.0
    return float(stats.binomtest(wins, n, 0.5, alternative="greater").pvalue)


def log_error_slope(ns, errors, floor: float | None = None) -> float:
    """Least-squares slope of ln(error) against n; zero errors are floored
    (e.g. at 1/trials) so the regression stays defined."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if floor is not None:
        errors = np.maximum(errors, floor)
    if np.any(errors <= 0):
        raise ValueError("errors must be positive (set a floor for zero counts)")
    slope, _ = np.polyfit(ns, np.log(errors), 1)
    return float(slope)
