"""Monte Carlo experiments: tail curves, exponent fits and delocalization sweeps.

Every experiment runs ``trials`` independent tasks; trial ``i`` draws from
stream ``(seed, i)`` and results are folded in index order, so outputs are
bit-for-bit reproducible whatever the number of worker threads.  The compiled
kernels release the GIL, which lets a thread pool overlap trials.
"""

from __future__ import annotations

import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special, stats

from . import _io
from ._stats import floor_fraction, wilson_interval
from .baseline import G_cdf, limit_mass
from .deloc import min_subset_mass, profile
from .linalg import (NumericalError, dist_to_subspace, eigen_decompose, eps_scale,
                     kernel_svd, operator_norm, shift, singular_values,
                     smallest_singular_value)
from .randgen import MatrixEnsemble, derive_stream, sample_matrix
from .structure import CompressParams, classify

__all__ = [
    "RunReport",
    "SlopeFit",
    "TailCurve",
    "TrialError",
    "deloc_experiment",
    "dist_tail",
    "incompressible_image_experiment",
    "normal_vector_experiment",
    "opnorm_experiment",
    "slope_estimate",
    "smin_tail",
]


class TrialError(NumericalError):
    """A kernel failed inside one Monte Carlo trial."""

    def __init__(self, trial: int, seed: int, cause: Exception):
        super().__init__(f"trial {trial} (seed {seed}) failed: {cause}")
        self.trial = trial
        self.seed = seed
        self.cause = cause


def _check_trials(trials: int) -> None:
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be positive")


def _check_threads(threads: int) -> None:
    if int(threads) != threads or threads < 1:
        raise ValueError("threads must be a positive integer")


def _run_trials(fn: Callable[[int], object], trials: int, threads: int) -> list:
    _check_threads(threads)
    if threads == 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def _check_grid(eps_grid) -> np.ndarray:
    g = np.asarray(eps_grid, dtype=np.float64).reshape(-1)
    if g.size == 0:
        raise ValueError("eps grid must be nonempty")
    if np.any(~np.isfinite(g)) or np.any(g <= 0):
        raise ValueError("eps grid values must be positive")
    if np.any(np.diff(g) <= 0):
        raise ValueError("eps grid must be strictly ascending")
    return g


# --------------------------------------------------------------------------
# result types
# --------------------------------------------------------------------------


@dataclass
class TailCurve:
    """Empirical ``P(statistic <= eps)`` on a grid, from shared samples."""

    eps_grid: np.ndarray
    hits: np.ndarray
    trials: int
    statistic: np.ndarray = field(repr=False)
    config: dict = field(default_factory=dict)
    master_seed: Optional[int] = None
    oracle: Optional[np.ndarray] = None

    @classmethod
    def from_statistic(cls, eps_grid, statistic, **kw) -> "TailCurve":
        g = _check_grid(eps_grid)
        s = np.sort(np.asarray(statistic, dtype=np.float64))
        hits = np.searchsorted(s, g, side="right").astype(np.int64)
        return cls(g, hits, int(s.size), np.asarray(statistic, dtype=np.float64), **kw)

    @property
    def phat(self) -> np.ndarray:
        return self.hits / self.trials

    @property
    def wilson(self) -> tuple[np.ndarray, np.ndarray]:
        return wilson_interval(self.hits, self.trials)

    def to_csv(self) -> str:
        out = io.StringIO()
        if self.config:
            out.write(f"# config: {_io.dumps(self.config, indent=0).replace(chr(10), '')}\n")
        if self.master_seed is not None:
            out.write(f"# master_seed: {self.master_seed}\n")
        cols = "eps,hits,trials,phat,wilson_lo,wilson_hi"
        out.write(cols + (",oracle\n" if self.oracle is not None else "\n"))
        lo, hi = self.wilson
        f = _io.fmt_float
        for k in range(self.eps_grid.size):
            row = [f(self.eps_grid[k]), str(int(self.hits[k])), str(self.trials),
                   f(self.phat[k]), f(lo[k]), f(hi[k])]
            if self.oracle is not None:
                row.append(f(self.oracle[k]))
            out.write(",".join(row) + "\n")
        return out.getvalue()


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    points: int

    def as_dict(self) -> dict:
        return {"slope": self.slope, "stderr": self.stderr,
                "intercept": self.intercept, "points": self.points}


def slope_estimate(curve: TailCurve, min_hits: int = 20) -> SlopeFit:
    """OLS slope of ``log phat`` against ``log eps`` over points with enough hits.

    ``stderr`` is ``nan`` when exactly two points are usable.
    """
    use = curve.hits >= min_hits
    if int(np.sum(use)) < 2:
        raise ValueError(
            f"slope fit needs at least 2 grid points with >= {min_hits} hits, "
            f"found {int(np.sum(use))}"
        )
    x = np.log(curve.eps_grid[use])
    y = np.log(curve.phat[use])
    k = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    if k > 2:
        rss = float(np.sum((y - intercept - slope * x) ** 2))
        stderr = math.sqrt(rss / (k - 2) / sxx)
    else:
        stderr = math.nan
    return SlopeFit(slope, stderr, intercept, k)


@dataclass
class RunReport:
    """Configuration echo, seed, metrics and optional slope of one run."""

    config: dict
    master_seed: int
    metrics: dict
    slope: Optional[dict] = None
    runtime_seconds: float = 0.0
    failures: int = 0

    def as_dict(self, include_runtime: bool = False) -> dict:
        d = {"config": self.config, "master_seed": self.master_seed,
             "metrics": self.metrics, "slope": self.slope, "failures": self.failures}
        if include_runtime:
            d["runtime_seconds"] = self.runtime_seconds
        return d

    def to_json(self, include_runtime: bool = False) -> str:
        """JSON text; the wall-clock runtime is left out unless requested so
        that reruns compare byte for byte."""
        return _io.dumps(self.as_dict(include_runtime)) + "\n"


def _quantiles(x: np.ndarray, prefix: str) -> dict:
    q = np.quantile(x, [0.05, 0.5, 0.95])
    return {f"{prefix}_q05": float(q[0]), f"{prefix}_q50": float(q[1]), f"{prefix}_q95": float(q[2])}


# --------------------------------------------------------------------------
# tail experiments
# --------------------------------------------------------------------------


def smin_tail(ensemble: MatrixEnsemble, lam: complex, eps_grid: Sequence[float],
              trials: int, seed: int, M: float = 1.0, threads: int = 1) -> TailCurve:
    """Tail of ``s_n(A - lam) / (sqrt(N) - sqrt(n-1))`` on ``eps_grid``.

    One draw of ``A`` per trial serves every grid point.
    """
    _check_trials(trials)
    g = _check_grid(eps_grid)
    N, n = ensemble.rows, ensemble.cols
    if N < n:
        raise ValueError(f"need rows >= cols, got {N} x {n}")
    if abs(lam) > M * math.sqrt(N):
        raise ValueError(f"|lambda| = {abs(lam):.6g} exceeds M sqrt(N) = {M * math.sqrt(N):.6g}")
    scale = eps_scale(N, n)

    def trial(i: int) -> float:
        A = sample_matrix(ensemble, derive_stream(seed, i))
        try:
            return smallest_singular_value(shift(A, lam)) / scale
        except NumericalError as exc:
            raise TrialError(i, seed, exc) from exc

    stat = np.array(_run_trials(trial, trials, threads))
    config = {"experiment": "smin-tail", **ensemble.echo(), "lambda_re": float(np.real(lam)),
              "lambda_im": float(np.imag(lam)), "M": float(M), "trials": int(trials),
              "eps_grid": [float(e) for e in g]}
    return TailCurve.from_statistic(g, stat, config=config, master_seed=seed)


def dist_tail(N: int, m: int, trials: int, eps_grid: Sequence[float], seed: int,
              dist: str = "standard-gaussian", field: str = "complex",
              threads: int = 1) -> TailCurve:
    """Tail of ``dist(X, H) / sqrt(m)`` for random ``X`` and random ``H`` of codimension ``m``.

    ``X`` and the ``N - m`` vectors spanning ``H`` are the rows of one
    ``(N - m + 1) x N`` ensemble draw.  For Gaussian entries the exact law
    is attached as ``oracle``: ``P(chi2_{2m} <= m eps^2)`` in the complex
    case (each coordinate of ``X`` has two unit-variance parts) and
    ``P(chi2_m <= m eps^2)`` in the real case.
    """
    _check_trials(trials)
    g = _check_grid(eps_grid)
    if not 0 < m < N:
        raise ValueError(f"need 0 < m < N, got m={m}, N={N}")
    ens = MatrixEnsemble(field=field, rows=N - m + 1, cols=N, dist=dist)

    def trial(i: int) -> float:
        R = sample_matrix(ens, derive_stream(seed, i))
        return dist_to_subspace(R[0], R[1:]) / math.sqrt(m)

    stat = np.array(_run_trials(trial, trials, threads))
    oracle = None
    if ens.dist.kind == "standard-gaussian":
        dof = 2 * m if field == "complex" else m
        oracle = stats.chi2.cdf(m * g**2, dof)
    config = {"experiment": "dist-tail", "N": int(N), "m": int(m), "field": field,
              "dist": ens.dist.kind, "trials": int(trials), "eps_grid": [float(e) for e in g]}
    return TailCurve.from_statistic(g, stat, config=config, master_seed=seed, oracle=oracle)


# --------------------------------------------------------------------------
# spectral sweeps
# --------------------------------------------------------------------------


def deloc_experiment(n: int, ensemble: MatrixEnsemble, m_list: Sequence[int], trials: int,
                     seed: int, threads: int = 1, scale: float = 1.0) -> RunReport:
    """Worst subset mass over all eigenvectors, per trial and per ``m``.

    For complex ensembles every eigenvector counts and
    ``c_hat = min_trials worst / (m/n)^(3/2)``.  For real ensembles only
    eigenvectors of real eigenvalues (``|Im lam| <= 1e-8 ||A||``) count and
    the normalization is ``(m/n)^2``.  Eigensolver failures are counted and
    the trial dropped.  ``scale`` multiplies every sampled matrix.
    """
    _check_trials(trials)
    if n < 2:
        raise ValueError("deloc_experiment needs n >= 2")
    ms = [int(m) for m in m_list]
    if not ms or any(not 1 <= m <= n for m in ms):
        raise ValueError(f"every m must satisfy 1 <= m <= n={n}")
    ens = ensemble.with_shape(n, n)
    real = ens.field == "real"

    def trial(i: int):
        A = scale * sample_matrix(ens, derive_stream(seed, i))
        try:
            sp = eigen_decompose(A)
        except NumericalError:
            return None
        min_coord = math.inf
        worst = {m: math.inf for m in ms}
        n_used = 0
        for k in range(n):
            p = profile(sp.vectors[:, k])
            min_coord = min(min_coord, math.sqrt(p.sorted_sq[0]))
            if real and abs(sp.values[k].imag) > 1e-8 * sp.norm:
                continue
            n_used += 1
            for m in ms:
                worst[m] = min(worst[m], min_subset_mass(p, m))
        return worst, min_coord, n_used

    t0 = time.perf_counter()
    results = _run_trials(trial, trials, threads)
    done = [r for r in results if r is not None]
    failures = len(results) - len(done)
    expo = 2.0 if real else 1.5
    metrics: dict = {"per_m": {}}
    for m in ms:
        w = np.array([r[0][m] for r in done if math.isfinite(r[0][m])])
        entry = {"m": m, "exponent": expo, "trials_used": int(w.size)}
        if w.size:
            entry.update({"worst_mass_min": float(w.min()), **_quantiles(w, "worst_mass"),
                          "c_hat": float(w.min() / (m / n) ** expo)})
        else:
            entry.update({"worst_mass_min": None, "c_hat": None})
        metrics["per_m"][str(m)] = entry
    coords = [r[1] for r in done]
    metrics["min_coord_modulus"] = float(min(coords)) if coords else None
    metrics["eigenpairs_used"] = int(sum(r[2] for r in done))
    config = {"experiment": "deloc", **ens.echo(), "m_list": ms, "trials": int(trials),
              "scale": float(scale)}
    return RunReport(config, seed, metrics, None, time.perf_counter() - t0, failures)


def normal_vector_experiment(n: int, ensemble: MatrixEnsemble, delta_list: Sequence[float],
                             trials: int, seed: int, threads: int = 1) -> RunReport:
    """Subset masses of the unit normal to ``n - 1`` random rows.

    Reports, per ``delta``, the mean squared mass of the ``floor(delta n)``
    smallest and largest coordinates against their limits, and the
    Kolmogorov-Smirnov distance of the pooled ``sqrt(n) |x_i|`` from the
    modulus law of a standard Gaussian of the ensemble's field
    (``1 - exp(-x^2)`` complex, ``erf(x / sqrt 2)`` real).  Draws whose
    ``s_{n-1}`` falls below ``1e-12 ||A||`` are discarded and counted.
    """
    _check_trials(trials)
    if n < 3:
        raise ValueError("normal_vector_experiment needs n >= 3")
    deltas = [float(d) for d in delta_list]
    if not deltas or any(not 0 < d <= 1 for d in deltas):
        raise ValueError("every delta must lie in (0, 1]")
    ks = [floor_fraction(d, n) for d in deltas]
    if any(k < 1 for k in ks):
        raise ValueError("every delta must give floor(delta n) >= 1")
    ens = ensemble.with_shape(n - 1, n)

    def trial(i: int):
        A = sample_matrix(ens, derive_stream(seed, i))
        try:
            v, s = kernel_svd(A)
        except NumericalError:
            return None
        if s[-1] < 1e-12 * s[0]:
            return None
        sq = np.sort(np.abs(v) ** 2)
        lows = [float(np.sum(sq[:k])) for k in ks]
        highs = [float(np.sum(sq[n - k:])) for k in ks]
        return lows, highs, math.sqrt(n) * np.abs(v)

    t0 = time.perf_counter()
    results = _run_trials(trial, trials, threads)
    done = [r for r in results if r is not None]
    metrics: dict = {"per_delta": {}, "discarded": len(results) - len(done)}
    if done:
        for j, d in enumerate(deltas):
            lo = float(np.mean([r[0][j] for r in done]))
            hi = float(np.mean([r[1][j] for r in done]))
            lim_lo, lim_hi = limit_mass(d, "min"), limit_mass(d, "max")
            metrics["per_delta"][repr(d)] = {
                "delta": d, "k": ks[j],
                "mean_min_mass_sq": lo, "limit_min": lim_lo, "rel_err_min": (lo - lim_lo) / lim_lo,
                "mean_max_mass_sq": hi, "limit_max": lim_hi, "rel_err_max": (hi - lim_hi) / lim_hi,
            }
        pooled = np.concatenate([r[2] for r in done])
        if ens.field == "complex":
            cdf, ref = G_cdf, "1-exp(-x^2)"
        else:
            cdf, ref = (lambda x: special.erf(x / math.sqrt(2.0))), "erf(x/sqrt(2))"
        metrics["ks_distance"] = float(stats.kstest(pooled, cdf).statistic)
        metrics["ks_reference"] = ref
    config = {"experiment": "normal-vector", **ens.echo(), "delta_list": deltas,
              "trials": int(trials)}
    return RunReport(config, seed, metrics, None, time.perf_counter() - t0, 0)


def opnorm_experiment(n: int, ensemble: MatrixEnsemble, trials: int, seed: int,
                      threads: int = 1, quantile: float = 0.999) -> RunReport:
    """Distribution of ``||A|| / sqrt(n)`` for square ``n x n`` draws.

    The ``quantile`` empirical quantile is reported as the fitted ``M``.
    """
    _check_trials(trials)
    if n < 2:
        raise ValueError("opnorm_experiment needs n >= 2")
    if not 0 < quantile <= 1:
        raise ValueError("quantile must lie in (0, 1]")
    ens = ensemble.with_shape(n, n)

    def trial(i: int) -> float:
        return operator_norm(sample_matrix(ens, derive_stream(seed, i)), tol=1e-10) / math.sqrt(n)

    t0 = time.perf_counter()
    vals = np.array(_run_trials(trial, trials, threads))
    metrics = {"mean": float(vals.mean()), "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
               "min": float(vals.min()), "max": float(vals.max()),
               "quantile": float(quantile), "fitted_M": float(np.quantile(vals, quantile))}
    config = {"experiment": "opnorm", **ens.echo(), "trials": int(trials)}
    return RunReport(config, seed, metrics, None, time.perf_counter() - t0, 0)


def _compressible_vector(rng: np.random.Generator, n: int, k: int, rho: float, complex_field: bool):
    def gauss(size):
        if complex_field:
            parts = rng.standard_normal((size, 2))
            return parts[:, 0] + 1j * parts[:, 1]
        return rng.standard_normal(size).astype(np.complex128)

    y = np.zeros(n, dtype=np.complex128)
    y[rng.choice(n, size=k, replace=False)] = gauss(k)
    y /= np.linalg.norm(y)
    w = gauss(n)
    w -= np.vdot(y, w) * y
    w /= np.linalg.norm(w)
    r = rho * rng.random()
    # distance to the sparse vector sqrt(1 - r^2) y is exactly r
    return math.sqrt(1.0 - r * r) * y + r * w


def incompressible_image_experiment(N: int, n: int, lam: complex, delta: float, rho: float,
                                    trials: int, seed: int, threads: int = 1) -> RunReport:
    """Images of compressible unit vectors under ``A - lam``.

    Each trial draws a complex Gaussian ``N x n`` matrix and one vector
    within ``rho`` of a ``floor(delta n)``-sparse unit vector, and records
    ``||(A - lam) x|| / sqrt(N)`` and ``||(A - lam) x|| / ||A - lam||``.
    """
    _check_trials(trials)
    if not 2 * N >= n:
        raise ValueError(f"need N >= n/2, got N={N}, n={n}")
    params = CompressParams(delta, rho)
    k = max(1, floor_fraction(delta, n))
    ens = MatrixEnsemble(field="complex", rows=N, cols=n)

    def trial(i: int):
        rng = derive_stream(seed, i).generator()
        B = shift(sample_matrix(ens, rng), lam)
        x = _compressible_vector(rng, n, k, rho, True)
        if classify(x, params) != "compressible":
            raise RuntimeError("constructed vector is not compressible")
        img = float(np.linalg.norm(B @ x))
        return img / math.sqrt(N), img / float(singular_values(B)[0])

    t0 = time.perf_counter()
    res = np.array(_run_trials(trial, trials, threads))
    scaled, ratio = res[:, 0], res[:, 1]
    q = np.quantile(scaled, [0.001, 0.01, 0.05, 0.5])
    metrics = {"min": float(scaled.min()), "q001": float(q[0]), "q01": float(q[1]),
               "q05": float(q[2]), "q50": float(q[3]), "max_norm_ratio": float(ratio.max())}
    config = {"experiment": "incompressible-image", "N": int(N), "n": int(n),
              "lambda_re": float(np.real(lam)), "lambda_im": float(np.imag(lam)),
              "delta": float(delta), "rho": float(rho), "trials": int(trials)}
    return RunReport(config, seed, metrics, None, time.perf_counter() - t0, 0)
