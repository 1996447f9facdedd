"""Subset-mass statistics of unit vectors, localization events and bound formulas.

For a unit vector ``v`` and ``1 <= m <= n`` the smallest mass carried by an
``m``-subset of coordinates is ``sqrt`` of the sum of the ``m`` smallest
``|v_i|^2``, so every subset question reduces to one sort.

The threshold formulas take the unspecified absolute constants as keyword
arguments defaulting to 1.  Two small-``m`` variants intentionally keep their
different exponents: ``cplx-small-m`` uses ``(m/n)^(3/2 + 1/m)`` while
``normal-small-m`` uses ``(m/n)^(3/2)``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import Spectrum, shift

__all__ = [
    "DelocProfile",
    "LocWitness",
    "ParameterSet",
    "approx_loc_event",
    "deloc_lower_bound",
    "delta_from_eps",
    "epsilon_schedule",
    "loc_event",
    "max_subset_mass",
    "min_subset_mass",
    "net_cardinality_bound",
    "profile",
    "profile_from_csv",
    "profile_to_csv",
]


@dataclass(frozen=True)
class DelocProfile:
    """Sorted squared coordinate magnitudes of a normalized vector.

    Attributes
    ----------
    n : int
    sorted_sq : ndarray
        ``|v_i|^2`` in ascending order.
    linf : float
        Largest coordinate modulus.
    order : ndarray
        Coordinate indices matching ``sorted_sq`` (stable, so equal
        magnitudes appear lowest index first).
    """

    n: int
    sorted_sq: np.ndarray
    linf: float
    order: np.ndarray

    def smallest_indices(self, m: int) -> tuple[int, ...]:
        return tuple(sorted(int(i) for i in self.order[:m]))


def profile(v) -> DelocProfile:
    """Profile of ``v / ||v||``."""
    x = np.asarray(v, dtype=np.complex128).reshape(-1)
    nrm = np.linalg.norm(x)
    if not nrm > 0.0:
        raise ValueError("cannot profile the zero vector")
    mod = np.abs(x / nrm)
    order = np.argsort(mod, kind="stable")
    srt = mod[order]
    return DelocProfile(n=x.shape[0], sorted_sq=srt**2, linf=float(srt[-1]), order=order)


def _check_m(p: DelocProfile, m: int) -> int:
    if int(m) != m or not 1 <= m <= p.n:
        raise ValueError(f"subset size m must satisfy 1 <= m <= n={p.n}, got {m}")
    return int(m)


def min_subset_mass(p: DelocProfile, m: int) -> float:
    """``min ||v_I||_2`` over ``|I| = m``."""
    m = _check_m(p, m)
    return math.sqrt(float(np.sum(p.sorted_sq[:m])))


def max_subset_mass(p: DelocProfile, m: int) -> float:
    """``max ||v_I||_2`` over ``|I| = m``."""
    m = _check_m(p, m)
    return math.sqrt(float(np.sum(p.sorted_sq[p.n - m:])))


def profile_to_csv(p: DelocProfile) -> str:
    out = io.StringIO()
    out.write("index,sorted_sq\n")
    for i, s in enumerate(p.sorted_sq):
        out.write(f"{i},{float(s):.17g}\n")
    out.write(f"linf,{p.linf:.17g}\n")
    return out.getvalue()


def profile_from_csv(text: str) -> tuple[np.ndarray, float]:
    """Returns ``(sorted_sq, linf)``; coordinate indices are not persisted."""
    rows = [ln.split(",") for ln in text.strip().splitlines()[1:]]
    if not rows or rows[-1][0] != "linf":
        raise ValueError("profile CSV lacks the linf footer")
    return np.array([float(r[1]) for r in rows[:-1]]), float(rows[-1][1])


# --------------------------------------------------------------------------
# localization events
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ParameterSet:
    """Parameters shared by the localization events and bounds."""

    m: int
    n: int
    delta: float
    M: float = 1.0
    t: float = 1.0
    eps: float = 1.0
    lam0: complex = 0j

    def __post_init__(self):
        if not 0.0 < self.t <= 1.0:
            raise ValueError(f"t must lie in (0, 1], got {self.t}")
        if not 1 <= self.m <= self.n:
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if not self.M >= 1.0:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {self.delta}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")


@dataclass(frozen=True)
class LocWitness:
    holds: bool
    eigen_index: Optional[int] = None
    subset: Optional[tuple[int, ...]] = None
    mass: Optional[float] = None


def loc_event(spectrum: Spectrum, m: int, delta: float) -> LocWitness:
    """Whether some eigenvector has an ``m``-subset of mass below ``delta``.

    The witness is the eigenvector with the smallest such mass (lowest index
    on ties) together with its ``m`` smallest coordinates.
    """
    best = None
    for k in range(len(spectrum)):
        p = profile(spectrum.vectors[:, k])
        mass = min_subset_mass(p, m)
        if best is None or mass < best[0]:
            best = (mass, k, p)
    mass, k, p = best
    if mass < delta:
        return LocWitness(True, k, p.smallest_indices(m), mass)
    return LocWitness(False)


def approx_loc_event(A, v, lam0: complex, ps: ParameterSet) -> bool:
    """``||(A - lam0) v|| <= delta M sqrt(n)`` and some ``m``-subset has mass < delta."""
    x = np.asarray(v, dtype=np.complex128).reshape(-1)
    B = shift(A, lam0)
    if B.shape[1] != x.shape[0]:
        raise ValueError(f"matrix has {B.shape[1]} columns but v has length {x.shape[0]}")
    n = B.shape[1]
    near = np.linalg.norm(B @ x) <= ps.delta * ps.M * math.sqrt(n)
    return bool(near and min_subset_mass(profile(x), ps.m) < ps.delta)


# --------------------------------------------------------------------------
# bound and schedule formulas
# --------------------------------------------------------------------------

BOUND_VARIANTS = (
    "cplx-large-m", "cplx-small-m", "mincoord",
    "real-large-m", "real-small-m", "normal-large-m", "normal-small-m",
)


def _check_tmn(t: float, m: int, n: int) -> None:
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t}")
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")


def deloc_lower_bound(theorem: str, t: float, m: int, n: int,
                      c: float = 1.0, c_prime: float = 1.0) -> float:
    """Threshold below which no eigenvector subset mass should fall.

    Parameters
    ----------
    theorem : str
        One of ``cplx-large-m``, ``cplx-small-m``, ``mincoord``,
        ``real-large-m``, ``real-small-m``, ``normal-large-m``,
        ``normal-small-m``.
    t : float
        Tail parameter in ``(0, 1]``.
    m, n : int
        Subset size and dimension (``m`` is ignored by ``mincoord``).
    c, c_prime : float
        The leading constant and the upper range constant in ``m <= c' n``.

    Raises
    ------
    ValueError
        If ``(t, m, n)`` is outside the variant's range; the message names
        the violated constraint.
    """
    if theorem not in BOUND_VARIANTS:
        raise ValueError(f"unknown variant {theorem!r}; expected one of {BOUND_VARIANTS}")
    _check_tmn(t, m, n)
    log_n = math.log(n)
    log2n = log_n**2
    large = theorem.endswith("large-m")
    small = theorem.endswith("small-m")
    if large and not log2n <= m:
        raise ValueError(f"{theorem} requires log^2(n) <= m; got log^2(n)={log2n:.6g}, m={m}")
    if large and not m <= c_prime * n:
        raise ValueError(f"{theorem} requires m <= c' n; got m={m}, c' n={c_prime * n:.6g}")
    if small and not m <= log2n:
        raise ValueError(f"{theorem} requires m <= log^2(n); got m={m}, log^2(n)={log2n:.6g}")
    if theorem == "mincoord" and n < 2:
        raise ValueError("mincoord requires n >= 2 so that log(n) > 0")

    r = m / n
    st = math.sqrt(t)
    if theorem in ("cplx-large-m", "normal-large-m"):
        return c * st * r**1.5
    if theorem == "cplx-small-m":
        return c * st / log2n * r ** (1.5 + 1.0 / m)
    if theorem == "mincoord":
        return c * st / (n**2.5 * log2n)
    if theorem == "real-large-m":
        return c * t * r**2
    if theorem == "real-small-m":
        return c * t * r ** (2.0 + 1.0 / m)
    return c * st / log_n * r**1.5  # normal-small-m


def delta_from_eps(eps: float, M: float, n: int, m: int, variant: str = "square-shift") -> float:
    """Solve ``6 delta M sqrt(n) = eps (sqrt(k) - sqrt(n - m - 1))`` for delta.

    ``k = n`` for ``square-shift`` and ``k = n - 1`` for ``rect-shift``.
    """
    if variant not in ("square-shift", "rect-shift"):
        raise ValueError(f"variant must be 'square-shift' or 'rect-shift', got {variant!r}")
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not M >= 1.0:
        raise ValueError(f"M must be >= 1, got {M}")
    top = n - 1 if variant == "square-shift" else n - 2
    if not 1 <= m <= top:
        raise ValueError(f"{variant} requires 1 <= m <= {top} for n={n}, got m={m}")
    k = n if variant == "square-shift" else n - 1
    return eps * (math.sqrt(k) - math.sqrt(n - m - 1)) / (6.0 * M * math.sqrt(n))


SCHEDULE_VARIANTS = ("cplx", "real", "cplx-small", "normal", "normal-small")


def epsilon_schedule(variant: str, t: float, m: int, n: int) -> float:
    """Singular-value scale ``eps`` as a function of ``(t, m, n)``.

    ============  ====================================================
    variant       defining identity
    ============  ====================================================
    cplx          eps = t^(m/(2m-1)) (m/n)^((m+2)/(2m-1))
    real          eps = t (m/n)^((m+1)/m)
    cplx-small    (n/m)^(1+2/m) log(n)^(2+2/m) eps^2 = t
    normal        (n/m) eps^((2m-1)/m) = t
    normal-small  eps = sqrt(t) sqrt(m/n) / log(n)
    ============  ====================================================
    """
    if variant not in SCHEDULE_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {SCHEDULE_VARIANTS}")
    _check_tmn(t, m, n)
    r = m / n
    if variant == "cplx":
        return t ** (m / (2 * m - 1)) * r ** ((m + 2) / (2 * m - 1))
    if variant == "real":
        return t * r ** ((m + 1) / m)
    if variant == "normal":
        return (t * r) ** (m / (2 * m - 1))
    if n < 2:
        raise ValueError(f"{variant} requires n >= 2 so that log(n) > 0")
    log_n = math.log(n)
    if variant == "cplx-small":
        return math.sqrt(t * r ** (1 + 2 / m) / log_n ** (2 + 2 / m))
    return math.sqrt(t) * math.sqrt(r) / log_n


def net_cardinality_bound(kind: str, param: float, n: Optional[int] = None) -> float:
    """Size bounds for nets: ``9/delta^2`` (disc), ``3/delta`` (interval),
    ``4n (1 + 2/eps)^(2n-1)`` (unit sphere of C^n).

    Returns ``inf`` when the sphere bound overflows a double.
    """
    if kind == "complex-disc":
        if not 0.0 < param <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {param}")
        return 9.0 / param**2
    if kind == "real-interval":
        if not 0.0 < param <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {param}")
        return 3.0 / param
    if kind == "sphere":
        if n is None or n < 1:
            raise ValueError("sphere bound needs a dimension n >= 1")
        if not param > 0.0:
            raise ValueError(f"eps must be positive, got {param}")
        try:
            return 4.0 * n * (1.0 + 2.0 / param) ** (2 * n - 1)
        except OverflowError:
            return math.inf
    raise ValueError(f"unknown net kind {kind!r}")
