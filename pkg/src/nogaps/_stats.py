"""Small statistics helpers shared by the simulation modules."""

from __future__ import annotations

import math

import numpy as np

# two-sided 95% normal quantile
Z95 = 1.959963984540054


def wilson_interval(hits, trials, z: float = Z95):
    """Wilson score interval for a binomial proportion.

    Vectorized over ``hits``; returns ``(lo, hi)`` arrays (or floats).
    """
    k = np.asarray(hits, dtype=np.float64)
    n = float(trials)
    if n <= 0:
        raise ValueError("trials must be positive")
    p = k / n
    z2 = z * z
    den = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / den
    # pin the endpoints exactly at the extremes
    lo = np.where(k <= 0, 0.0, np.clip(center - half, 0.0, 1.0))
    hi = np.where(k >= n, 1.0, np.clip(center + half, 0.0, 1.0))
    if np.ndim(hits) == 0:
        return float(lo), float(hi)
    return lo, hi


def floor_fraction(delta: float, n: int) -> int:
    """``floor(delta * n)`` robust to the product landing a hair below an integer."""
    x = delta * n
    k = math.floor(x)
    if math.isclose(x, k + 1, rel_tol=1e-12, abs_tol=0.0):
        k += 1
    return int(k)
