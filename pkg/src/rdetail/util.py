"""Small statistical helpers shared across modules."""

from __future__ import annotations

import numpy as np


def wilson_interval(successes, trials, z: float = 1.959963984540054):
    """Wilson 95% score interval for a binomial proportion (vectorized)."""
    k = np.asarray(successes, dtype=float)
    n = float(trials)
    if n <= 0:
        raise ValueError("trials must be positive")
    p = k / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2))
    return center - half, center + half


def batch_means_se(x: np.ndarray, n_batches: int = 32) -> float:
    """Standard error of the mean of a correlated sequence via batch means."""
    n = len(x)
    if n < 2 * n_batches:
        n_batches = max(2, n // 2)
    length = n // n_batches
    trimmed = x[: n_batches * length].reshape(n_batches, length)
    means = trimmed.mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def ess_batch_means(x: np.ndarray, n_batches: int = 32) -> float:
    """Effective sample size: n scaled by the iid-to-long-run variance ratio."""
    n = len(x)
    var = float(np.var(x))
    if var == 0.0:
        return float(n)
    se = batch_means_se(x, n_batches)
    long_run = se**2 * n
    return float(min(n, n * var / long_run)) if long_run > 0 else float(n)


def ks_two_sample_critical(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample Kolmogorov-Smirnov critical value."""
    c = np.sqrt(-0.5 * np.log(alpha / 2.0))
    return float(c * np.sqrt((n + m) / (n * m)))
