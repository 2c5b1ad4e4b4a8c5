"""Robust estimators for heavy-tailed Monte Carlo summaries."""

from __future__ import annotations

import numpy as np

__all__ = ["median_of_means", "mom_variance"]


def median_of_means(values, n_blocks: int = 20):
    """Median-of-means location estimate with a robust standard error.

    Splits ``values`` into ``n_blocks`` contiguous blocks, averages within
    blocks, and returns ``(median of block means, stderr)``.  The stderr is
    an IQR-based estimate of the median's sampling error, which stays finite
    even when the summands have infinite variance.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or len(x) < 2 * n_blocks:
        raise ValueError(f"need at least {2 * n_blocks} values, got {len(x)}")
    block = len(x) // n_blocks
    means = x[: block * n_blocks].reshape(n_blocks, block).mean(axis=1)
    est = float(np.median(means))
    q75, q25 = np.percentile(means, [75, 25])
    # sigma of the block means from the IQR, then the usual asymptotic
    # factor sqrt(pi/2) for a sample median
    sigma = (q75 - q25) / 1.349
    stderr = float(1.2533 * sigma / np.sqrt(n_blocks))
    return est, stderr


def mom_variance(values, n_blocks: int = 20):
    """Variance estimate: median over blocks of the mean squared deviation.

    Deviations are taken from the global mean, and the small-sample bias of
    global centering is removed by the usual M/(M-1) factor.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or len(x) < 2 * n_blocks:
        raise ValueError(f"need at least {2 * n_blocks} values, got {len(x)}")
    M = len(x)
    sq = (x - x.mean()) ** 2
    block = M // n_blocks
    means = sq[: block * n_blocks].reshape(n_blocks, block).mean(axis=1)
    return float(np.median(means) * M / (M - 1))
