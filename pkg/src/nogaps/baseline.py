"""Baselines for vectors uniform on the unit sphere.

For a uniform unit vector in C^n the scaled squared coordinates
``n |v_i|^2`` are asymptotically distributed as ``Z^2/2 + Z'^2/2``, half a
chi-square with two degrees of freedom, whose CDF is ``F(x) = 1 - e^{-x}``.
Everything else follows from ``F``:

* ``G(x) = F(x^2)`` is the CDF of ``sqrt(n) |v_i|``,
* ``Q(s) = -log(1 - s)`` is its quantile function,
* ``H(s) = -Q(1 - s) = log(s)``.

The limiting mass of the ``delta n`` smallest (largest) coordinates is
``-int_{1-delta}^{1} H`` (``-int_0^delta H``), available here in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from ._stats import floor_fraction
from .deloc import max_subset_mass, min_subset_mass, profile
from .randgen import derive_stream, sample_unit_sphere

__all__ = [
    "F_cdf",
    "G_cdf",
    "H_func",
    "Q_quantile",
    "SphereSummary",
    "chi2_cdf",
    "default_band_params",
    "dyadic_band_counts",
    "limit_mass",
    "limit_mass_quadrature",
    "sphere_subset_mass_simulation",
]


def _nonneg(x):
    a = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(a)) or np.any(a < 0):
        raise ValueError("argument must be nonnegative")
    return a


def _out(a, x):
    return float(a) if np.ndim(x) == 0 else a


def F_cdf(x):
    """``1 - exp(-x)`` for ``x >= 0``."""
    a = _nonneg(x)
    return _out(-np.expm1(-a), x)


def G_cdf(x):
    """``F(x^2) = 1 - exp(-x^2)``."""
    a = _nonneg(x)
    return _out(-np.expm1(-a * a), x)


def chi2_cdf(x, dof: int):
    """Chi-square CDF for one or two degrees of freedom."""
    a = _nonneg(x)
    if dof == 1:
        return _out(special.erf(np.sqrt(a / 2.0)), x)
    if dof == 2:
        return _out(-np.expm1(-a / 2.0), x)
    raise ValueError(f"dof must be 1 or 2, got {dof}")


def Q_quantile(s):
    """``-log(1 - s)`` on ``[0, 1)``."""
    a = np.asarray(s, dtype=np.float64)
    if np.any(np.isnan(a)) or np.any(a < 0) or np.any(a >= 1):
        raise ValueError("Q is defined on [0, 1)")
    return _out(-np.log1p(-a), s)


def H_func(s):
    """``-Q(1 - s) = log(s)`` on ``(0, 1]``."""
    a = np.asarray(s, dtype=np.float64)
    if np.any(np.isnan(a)) or np.any(a <= 0) or np.any(a > 1):
        raise ValueError("H is defined on (0, 1]")
    return _out(np.log(a), s)


def _check_delta(delta: float) -> None:
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")


def limit_mass(delta: float, which: str) -> float:
    """Limiting squared mass of the ``delta n`` smallest or largest coordinates.

    ``min``: ``delta + (1 - delta) log(1 - delta)``;
    ``max``: ``delta (1 - log delta)``.  Both equal 1 at ``delta = 1``.
    """
    _check_delta(delta)
    if which == "min":
        if delta == 1.0:
            return 1.0
        return delta + (1.0 - delta) * math.log1p(-delta)
    if which == "max":
        return delta * (1.0 - math.log(delta))
    raise ValueError(f"which must be 'min' or 'max', got {which!r}")


def limit_mass_quadrature(delta: float, which: str) -> float:
    """Same limit by adaptive quadrature of ``-H``."""
    _check_delta(delta)
    if which == "min":
        lo, hi = 1.0 - delta, 1.0
    elif which == "max":
        lo, hi = 0.0, delta
    else:
        raise ValueError(f"which must be 'min' or 'max', got {which!r}")
    # the log singularity at 0 is integrable; quad never evaluates endpoints
    val, _ = integrate.quad(lambda u: -H_func(u), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(val)


# --------------------------------------------------------------------------
# dyadic bands
# --------------------------------------------------------------------------


def _band_base(delta: float, n: int, field: str) -> float:
    if field == "complex":
        return delta / n
    if field == "real":
        return delta**2 / n**2
    raise ValueError(f"field must be 'real' or 'complex', got {field!r}")


def dyadic_band_counts(v, delta: float, L: int, field: str) -> np.ndarray:
    """Counts of ``|v_i|^2`` in the half-open bands ``[b 2^(k-1), b 2^k)``.

    ``b = delta / n`` for complex vectors and ``delta^2 / n^2`` for real
    ones; ``k = 1, ..., L``.
    """
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if int(L) != L or L < 1:
        raise ValueError(f"L must be a positive integer, got {L}")
    x = np.abs(np.asarray(v, dtype=np.complex128).reshape(-1)) ** 2
    base = _band_base(delta, x.shape[0], field)
    edges = base * 2.0 ** np.arange(int(L) + 1)
    # searchsorted side='right' maps edges[k-1] <= x < edges[k] to slot k
    slot = np.searchsorted(edges, x, side="right")
    return np.bincount(slot, minlength=int(L) + 2)[1:int(L) + 1].astype(np.int64)


def default_band_params(n: int, m: int) -> tuple[float, int]:
    """``delta = 1/log n`` and ``L = floor(log2(m / (2 delta)))`` (complex case)."""
    if n < 2:
        raise ValueError("need n >= 2")
    delta = 1.0 / math.log(n)
    return delta, max(1, int(math.floor(math.log2(m / (2.0 * delta)))))


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SphereSummary:
    """Per-trial subset masses and sup norms of uniform sphere vectors."""

    n: int
    m: int
    field: str
    trials: int
    min_mass: np.ndarray
    max_mass: np.ndarray
    linf: np.ndarray

    def summary(self) -> dict:
        q05, q50, q95 = np.quantile(self.min_mass, [0.05, 0.5, 0.95])
        return {
            "n": self.n,
            "m": self.m,
            "field": self.field,
            "trials": self.trials,
            "mean_min_mass": float(np.mean(self.min_mass)),
            "mean_min_mass_sq": float(np.mean(self.min_mass**2)),
            "mean_max_mass_sq": float(np.mean(self.max_mass**2)),
            "q05": float(q05),
            "q50": float(q50),
            "q95": float(q95),
            "linf_max": float(np.max(self.linf)),
        }


def sphere_subset_mass_simulation(n: int, field: str, trials: int, seed: int,
                                  m: int | None = None,
                                  delta: float | None = None) -> SphereSummary:
    """Subset masses of ``trials`` uniform unit vectors.

    Exactly one of ``m`` or ``delta`` is given; ``delta`` means
    ``m = floor(delta n)``.  Trial ``i`` uses stream ``(seed, i)``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if (m is None) == (delta is None):
        raise ValueError("give exactly one of m or delta")
    if m is None:
        _check_delta(delta)
        m = floor_fraction(delta, n)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    mins = np.empty(trials)
    maxs = np.empty(trials)
    linf = np.empty(trials)
    for i in range(trials):
        p = profile(sample_unit_sphere(n, field, derive_stream(seed, i)))
        mins[i] = min_subset_mass(p, m)
        maxs[i] = max_subset_mass(p, m)
        linf[i] = p.linf
    return SphereSummary(n, m, field, trials, mins, maxs, linf)
