"""Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value."""

import math

import numpy as np

from ..errors import ArgumentError


def kolmogorov_sf(lam):
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form converges fast for small arguments
        z = -(math.pi ** 2) / (8.0 * lam * lam)
        s = sum(math.exp((2 * k - 1) ** 2 * z) for k in range(1, 8))
        return max(0.0, min(1.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    s = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        s += term if k % 2 else -term
        if term < 1e-18:
            break
    return max(0.0, min(1.0, 2.0 * s))


def ks_statistic(sample1, sample2):
    """Exact sup-distance between the two empirical CDFs."""
    x = np.sort(np.asarray(sample1, dtype=float).ravel())
    y = np.sort(np.asarray(sample2, dtype=float).ravel())
    if x.size == 0 or y.size == 0:
        raise ArgumentError("both samples must be non-empty")
    grid = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, grid, side="right") / x.size
    cdf_y = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(cdf_x - cdf_y)))


def ks_two_sample(sample1, sample2):
    """Return ``(statistic, p_value)``.

    The p-value uses the effective sample size ``m1 m2 / (m1 + m2)`` with the
    usual small-sample correction of the Kolmogorov argument.
    """
    d = ks_statistic(sample1, sample2)
    m1, m2 = np.size(sample1), np.size(sample2)
    en = math.sqrt(m1 * m2 / (m1 + m2))
    return d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)
