"""Arithmetic structure of vectors: LCD search, compressibility, spread, concentration.

The least common denominator of ``a`` with parameters ``(alpha, gamma)`` is
the smallest ``|theta|`` such that

    dist(theta a, Z^N) < min(gamma ||theta a||, alpha)

with ``theta`` real for real ``a`` and complex for complex ``a`` (then the
lattice is the Gaussian integers, i.e. ``Z^{2N}`` after realification).
The search here is resolution-certified: a grid scan finds the first
feasible grid point and bisection shrinks the gap to the last infeasible
one.  Reported values are always attained by a feasible witness, so they
are upper bounds on the infimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._stats import floor_fraction, wilson_interval
from .linalg import as_matrix
from .randgen import RandomSource, _rng
from . import _kernels as K

__all__ = [
    "CompressParams",
    "LcdQuery",
    "LcdResult",
    "LevyEstimate",
    "SubspaceLcdEstimate",
    "classify",
    "compress_distance",
    "lcd",
    "lcd_subspace_estimate",
    "level_set_membership",
    "levy_concentration",
    "spread_set",
    "totally_spread_check",
]

_CHUNK = 1 << 17


@dataclass(frozen=True)
class LcdQuery:
    """Parameters of one LCD search.

    ``field`` selects real or complex ``theta``; by default it follows the
    dtype of ``a``.
    """

    a: np.ndarray
    alpha: float = 1.0
    gamma: float = 0.5
    r_max: float = 10.0
    grid_step: float = 1e-2
    refine_iters: int = 40
    field: Optional[str] = None

    def __post_init__(self):
        a = np.asarray(self.a)
        is_complex = np.iscomplexobj(a)
        a = a.astype(np.complex128 if is_complex else np.float64).reshape(-1)
        if a.size == 0 or not np.any(a):
            raise ValueError("LCD of the zero vector is undefined")
        if not np.all(np.isfinite(a)):
            raise ValueError("vector has non-finite entries")
        object.__setattr__(self, "a", a)
        fld = self.field or ("complex" if is_complex else "real")
        if fld not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {fld!r}")
        if fld == "real" and is_complex and np.any(a.imag):
            raise ValueError("real LCD search needs a real vector")
        object.__setattr__(self, "field", fld)
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if not self.grid_step > 0:
            raise ValueError(f"grid_step must be positive, got {self.grid_step}")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be nonnegative")


@dataclass(frozen=True)
class LcdResult:
    """Outcome of :func:`lcd`.

    ``value`` is ``|witness_theta|`` when found and ``r_max`` otherwise;
    ``resolution`` is the width of the final bracket around the infimum.
    """

    status: str
    value: float
    witness_theta: Optional[complex]
    achieved_dist: Optional[float]
    resolution: float

    def record(self) -> dict:
        w = self.witness_theta
        return {
            "status": self.status,
            "value": self.value,
            "witness_re": None if w is None else float(np.real(w)),
            "witness_im": None if w is None else float(np.imag(w)),
            "achieved_dist": self.achieved_dist,
        }


def _lattice_dist(Y: np.ndarray) -> np.ndarray:
    """Row-wise distance of ``Y`` (real or complex) to the integer lattice."""
    if np.iscomplexobj(Y):
        re = Y.real - np.rint(Y.real)
        im = Y.imag - np.rint(Y.imag)
        return np.sqrt(np.sum(re * re + im * im, axis=-1))
    d = Y - np.rint(Y)
    return np.sqrt(np.sum(d * d, axis=-1))


def _slack(q: LcdQuery, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(threshold - dist, dist)`` for each theta; feasible iff slack > 0."""
    theta = np.asarray(theta)
    Y = theta[:, None] * q.a[None, :]
    dist = _lattice_dist(Y)
    thr = np.minimum(q.gamma * np.abs(theta) * np.linalg.norm(q.a), q.alpha)
    return thr - dist, dist


def _lcd_real(q: LcdQuery) -> LcdResult:
    h = q.grid_step
    count = int(math.ceil(q.r_max / h))
    for start in range(0, count, _CHUNK):
        k = np.arange(start + 1, min(count, start + _CHUNK) + 1)
        theta = np.minimum(k * h, q.r_max)
        slack, _ = _slack(q, theta)
        ok = np.flatnonzero(slack > 0)
        if ok.size:
            j = int(ok[0])
            hi = float(theta[j])
            lo = float(theta[j - 1]) if j > 0 else (start * h)
            break
    else:
        return LcdResult("exceeds_cap", float(q.r_max), None, None, h)
    for _ in range(q.refine_iters):
        mid = 0.5 * (lo + hi)
        if _slack(q, np.array([mid]))[0][0] > 0:
            hi = mid
        else:
            lo = mid
    dist = float(_slack(q, np.array([hi]))[1][0])
    return LcdResult("found", hi, complex(hi), dist, hi - lo)


def _band_angles(r: float, h: float) -> np.ndarray:
    # theta -> i*theta preserves the Gaussian-integer lattice, so a quarter
    # turn covers every angle
    count = max(2, int(math.ceil((0.5 * math.pi * r) / h)))
    return (0.5 * math.pi / count) * np.arange(count)


def _refine_complex(q: LcdQuery, lo: float, hi: float, phi: float, width: float):
    samples = 65
    best = None
    for _ in range(q.refine_iters):
        mid = 0.5 * (lo + hi)
        phis = phi + np.linspace(-width, width, samples)
        slack, _ = _slack(q, mid * np.exp(1j * phis))
        ok = np.flatnonzero(slack > 0)
        if ok.size:
            hi = mid
            phi = float(phis[ok[np.argmax(slack[ok])]])
            spacing = 2.0 * width / (samples - 1)
            extent = float(phis[ok[-1]] - phis[ok[0]])
            width = 0.5 * extent + 2.0 * spacing
        else:
            lo = mid
    theta = hi * np.exp(1j * phi)
    slack, dist = _slack(q, np.array([theta]))
    if slack[0] > 0:
        best = (hi, complex(theta), float(dist[0]), hi - lo)
    return best


def _lcd_complex(q: LcdQuery) -> LcdResult:
    h = q.grid_step
    count = int(math.ceil(q.r_max / h))
    found = None
    j = 1
    while j <= count and found is None:
        # gather whole bands until the chunk is large enough
        radii, thetas, owner = [], [], []
        size = 0
        while j <= count and size < _CHUNK:
            r = min(j * h, q.r_max)
            ang = _band_angles(r, h)
            radii.append(r)
            thetas.append(r * np.exp(1j * ang))
            owner.append(np.full(ang.size, len(radii) - 1))
            size += ang.size
            j += 1
        theta = np.concatenate(thetas)
        band = np.concatenate(owner)
        slack, _ = _slack(q, theta)
        ok = np.flatnonzero(slack > 0)
        if ok.size:
            b = int(band[ok[0]])
            found = (radii[b], radii[b - 1] if b > 0 else radii[0] - h, thetas[b], slack[band == b])
    if found is None:
        return LcdResult("exceeds_cap", float(q.r_max), None, None, h)

    r_hi, r_lo, band_theta, band_slack = found
    phis = np.angle(band_theta)
    step = phis[1] - phis[0] if phis.size > 1 else 0.5 * math.pi
    feas = np.flatnonzero(band_slack > 0)
    # contiguous runs of feasible angles are separate candidate regions
    runs = np.split(feas, np.flatnonzero(np.diff(feas) > 1) + 1)
    runs.sort(key=lambda run: -float(np.max(band_slack[run])))
    best = None
    for run in runs[:8]:
        phi0 = float(phis[run[np.argmax(band_slack[run])]])
        width = 0.5 * (run[-1] - run[0]) * step + 2.0 * step
        cand = _refine_complex(q, max(r_lo, 0.0), r_hi, phi0, width)
        if cand is not None and (best is None or cand[0] < best[0]):
            best = cand
    if best is None:
        # refinement never confirmed a point: fall back to the grid witness
        i = int(feas[np.argmax(band_slack[feas])])
        theta = complex(band_theta[i])
        dist = float(_slack(q, np.array([theta]))[1][0])
        return LcdResult("found", r_hi, theta, dist, h)
    value, theta, dist, res = best
    return LcdResult("found", value, theta, dist, res)


def lcd(query: LcdQuery) -> LcdResult:
    """Least common denominator of ``query.a`` by grid scan plus bisection.

    Real vectors are scanned on ``theta = h, 2h, ...``; complex ones on a
    polar grid with radius step ``h`` and arc spacing at most ``h``.  The
    first feasible grid point is refined by ``refine_iters`` bisection steps
    (with a local angular search in the complex case).
    """
    if query.field == "real":
        return _lcd_real(query)
    return _lcd_complex(query)


@dataclass(frozen=True)
class SubspaceLcdEstimate:
    """Minimum LCD over sampled unit vectors of a subspace.

    Always an upper bound on the subspace LCD (``upper_bound`` is True).
    """

    value: float
    samples: int
    best_index: Optional[int]
    values: tuple = field(repr=False, default=())
    upper_bound: bool = True


def lcd_subspace_estimate(basis, alpha: float, gamma: float, samples: int,
                          stream: RandomSource, **lcd_params) -> SubspaceLcdEstimate:
    """Estimate ``LCD(E)`` from above by sampling unit vectors of ``E = span(basis)``.

    Samples are drawn sequentially from one stream, so the first ``k``
    samples of a larger run coincide with a run of ``k`` samples.
    """
    B = as_matrix(np.atleast_2d(basis), "basis")
    if samples < 1:
        raise ValueError("samples must be positive")
    is_real = not np.any(B.imag)
    scale = float(np.max(np.linalg.norm(B, axis=1)))
    Q, rank = K.mgs_orthonormalize(B, 1e-12 * scale)
    if rank == 0:
        raise ValueError("basis spans the zero subspace")
    Q = Q[:rank]
    rng = _rng(stream)
    values = []
    for _ in range(samples):
        if is_real:
            c = rng.standard_normal(rank)
            a = (c @ Q).real
        else:
            parts = rng.standard_normal((rank, 2))
            a = (parts[:, 0] + 1j * parts[:, 1]) @ Q
        a = a / np.linalg.norm(a)
        res = lcd(LcdQuery(a, alpha=alpha, gamma=gamma, **lcd_params))
        values.append(res.value if res.status == "found" else math.inf)
    best = int(np.argmin(values))
    return SubspaceLcdEstimate(float(values[best]), samples,
                               best if math.isfinite(values[best]) else None, tuple(values))


def level_set_membership(x, D: float, alpha: float = 1.0, gamma: float = 0.5,
                         **lcd_params) -> Optional[bool]:
    """Whether ``D <= LCD(x) < 2D``.

    The true LCD lies in ``[value - grid_step, value]`` for a found result.
    Returns ``None`` (indeterminate) when that bracket straddles ``D`` or
    ``2D``, or when the search cap is exceeded before ``2D``.
    """
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    q = LcdQuery(np.asarray(x), alpha=alpha, gamma=gamma, **lcd_params)
    res = lcd(q)
    if res.status == "exceeds_cap":
        return False if q.r_max >= 2 * D else None
    lo, hi = res.value - q.grid_step, res.value
    if hi < D or lo >= 2 * D:
        return False
    if lo >= D and hi < 2 * D:
        return True
    return None


# --------------------------------------------------------------------------
# compressibility and spread
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CompressParams:
    delta: float
    rho: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")


def compress_distance(x, delta: float) -> float:
    """Distance from ``x`` to the nearest ``floor(delta n)``-sparse vector.

    That vector keeps the largest coordinates, so the distance is the mass
    of everything else.
    """
    v = np.asarray(x).reshape(-1)
    k = floor_fraction(delta, v.size)
    sq = np.sort(np.abs(v) ** 2)
    return math.sqrt(float(np.sum(sq[: max(v.size - k, 0)])))


def classify(x, params: CompressParams) -> str:
    """``compressible`` if within ``rho`` of a sparse vector, else ``incompressible``."""
    if compress_distance(x, params.delta) <= params.rho:
        return "compressible"
    return "incompressible"


def spread_set(x, nu2: float, nu3: float) -> tuple[np.ndarray, float]:
    """Indices with ``nu2/sqrt(n) <= |x_k| <= nu3/sqrt(n)`` and their fraction."""
    if not 0 < nu2 < nu3:
        raise ValueError(f"need 0 < nu2 < nu3, got {nu2}, {nu3}")
    v = np.abs(np.asarray(x).reshape(-1))
    s = math.sqrt(v.size)
    idx = np.flatnonzero((v >= nu2 / s) & (v <= nu3 / s))
    return idx, idx.size / v.size


def totally_spread_check(y, K1: float, K2: float) -> bool:
    """Every ``|y_k|`` lies in ``[K1/sqrt(d), K2/sqrt(d)]``."""
    v = np.abs(np.asarray(y).reshape(-1))
    if v.size < 1:
        raise ValueError("need at least one coordinate")
    s = math.sqrt(v.size)
    return bool(np.all((v >= K1 / s) & (v <= K2 / s)))


# --------------------------------------------------------------------------
# Levy concentration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyEstimate:
    estimate: float
    upper_conf: float
    trials: int
    hits: int


def _max_ball_count(S: np.ndarray, eps: float) -> int:
    if S.ndim == 1 and not np.iscomplexobj(S):
        s = np.sort(S)
        right = np.searchsorted(s, s + eps, side="right")
        left = np.searchsorted(s, s - eps, side="left")
        return int(np.max(right - left))
    X = S.reshape(S.shape[0], -1)
    if np.iscomplexobj(X):
        X = np.concatenate([X.real, X.imag], axis=1)
    sq = np.sum(X * X, axis=1)
    best = 0
    rows = max(1, (1 << 22) // max(1, X.shape[0]))
    for i in range(0, X.shape[0], rows):
        blk = X[i:i + rows]
        d2 = sq[i:i + rows, None] + sq[None, :] - 2.0 * (blk @ X.T)
        best = max(best, int(np.max(np.sum(d2 <= eps * eps * (1 + 1e-12), axis=1))))
    return best


def levy_concentration(sampler: Callable[[np.random.Generator, int], np.ndarray],
                       eps: float, trials: int, stream: RandomSource) -> LevyEstimate:
    """Estimate ``sup_v P(||S - v|| <= eps)`` with sample points as centers.

    Parameters
    ----------
    sampler : callable
        ``sampler(rng, size)`` returns ``size`` draws of ``S`` stacked along
        the first axis (scalars or vectors, real or complex).
    eps : float
    trials : int
        At least 1000.
    stream : SeedStream or Generator

    Returns
    -------
    LevyEstimate
        The maximal ball frequency and its Wilson 95% upper bound.
    """
    if trials < 1000:
        raise ValueError("levy_concentration needs at least 1000 trials")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    S = np.asarray(sampler(_rng(stream), trials))
    if S.shape[0] != trials:
        raise ValueError(f"sampler returned {S.shape[0]} draws, expected {trials}")
    hits = _max_ball_count(S, eps)
    _, hi = wilson_interval(hits, trials)
    return LevyEstimate(hits / trials, hi, trials, hits)
