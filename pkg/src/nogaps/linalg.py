"""Dense complex linear algebra on top of the compiled kernels.

Matrices are plain ``complex128`` numpy arrays.  All heavy lifting
(Hessenberg/QR eigensolver, Golub-Kahan bidiagonalization, bidiagonal QR,
Gram-Schmidt) lives in :mod:`nogaps._kernels`; this module validates input,
applies the canonical conventions and exposes the public contracts.

Conventions
-----------
* Eigenvalues are sorted lexicographically by (real part, imaginary part).
* Eigenvectors and kernel vectors are unit vectors whose largest-modulus
  coordinate (first one on ties) is real and nonnegative.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels as K

__all__ = [
    "AccuracyError",
    "ConvergenceError",
    "NumericalError",
    "Spectrum",
    "canonical_phase",
    "column_submatrix",
    "dist_to_subspace",
    "eigen_decompose",
    "eps_scale",
    "kernel_vector",
    "operator_norm",
    "read_matrix",
    "realify_matrix",
    "realify_vector",
    "shift",
    "singular_values",
    "smallest_singular_value",
    "write_matrix",
]


class NumericalError(RuntimeError):
    """A kernel failed to deliver its promised accuracy."""


class ConvergenceError(NumericalError):
    """QR iteration hit its cap.

    Attributes
    ----------
    schur : ndarray
        The partially reduced Hessenberg/Schur factor at the time of failure.
    vectors : ndarray
        Accumulated unitary with ``A = vectors @ schur @ vectors^*``.
    iterations : int
        Sweeps spent.
    active_row : int
        Last row of the window that had not deflated.
    """

    def __init__(self, message, schur=None, vectors=None, iterations=0, active_row=-1):
        super().__init__(message)
        self.schur = schur
        self.vectors = vectors
        self.iterations = iterations
        self.active_row = active_row


class AccuracyError(NumericalError):
    """A result was computed but its residual exceeds the requested bound."""


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Validate and convert to a C-contiguous finite ``complex128`` 2-D array."""
    M = np.array(A, dtype=np.complex128, order="C", copy=True)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _as_vector(x, name: str) -> np.ndarray:
    v = np.array(x, dtype=np.complex128, copy=True).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def shift(A, lam: complex) -> np.ndarray:
    """``A - lam`` with ``lam`` subtracted on the main diagonal only.

    Works for rectangular ``A``; the diagonal has ``min(rows, cols)`` entries.
    """
    M = as_matrix(A)
    k = min(M.shape)
    idx = np.arange(k)
    M[idx, idx] -= complex(lam)
    return M


def column_submatrix(A, J: Iterable[int]) -> np.ndarray:
    """Columns ``J`` of ``A`` in ascending index order."""
    M = as_matrix(A)
    cols = [int(j) for j in J]
    if not cols:
        raise ValueError("column index set must be nonempty")
    if len(set(cols)) != len(cols):
        raise ValueError("column index set has duplicate indices")
    bad = [j for j in cols if not 0 <= j < M.shape[1]]
    if bad:
        raise ValueError(f"column indices {bad} out of range for {M.shape[1]} columns")
    return np.ascontiguousarray(M[:, sorted(cols)])


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-modulus coordinate is real and nonnegative."""
    v = np.asarray(v, dtype=np.complex128)
    mod = np.abs(v)
    i = int(np.argmax(mod))
    if mod[i] == 0.0:
        return v.copy()
    out = v * (np.conj(v[i]) / mod[i])
    out[i] = mod[i]
    return out


# --------------------------------------------------------------------------
# singular values
# --------------------------------------------------------------------------


def _bidiag_svals(d, e) -> np.ndarray:
    dr, er, _ = K.realify_bidiagonal(d, e)
    n = dr.shape[0]
    status, _ = K.bidiagonal_svals(dr, er, 6 * n * n + 30)
    if status != 0:
        raise ConvergenceError("bidiagonal QR did not converge")
    return np.sort(np.abs(dr))[::-1]


def singular_values(A) -> np.ndarray:
    """All singular values of ``A`` in descending order.

    Wide matrices are handled through their conjugate transpose.
    """
    M = as_matrix(A)
    if M.shape[0] < M.shape[1]:
        M = np.ascontiguousarray(M.conj().T)
    d, e, _, _ = K.bidiagonalize(M, False)
    return _bidiag_svals(d, e)


def smallest_singular_value(A) -> float:
    """``s_n(A) = min ||Ax||`` over unit ``x`` for a tall or square ``A``.

    Computed from the bidiagonal singular spectrum (never from ``A^* A``).

    Raises
    ------
    ValueError
        If ``A`` has fewer rows than columns; transpose first.
    """
    M = as_matrix(A)
    if M.shape[0] < M.shape[1]:
        raise ValueError(
            f"rows < cols ({M.shape[0]} < {M.shape[1]}); pass the transpose instead"
        )
    return float(singular_values(M)[-1])


def operator_norm(A, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on ``A^* A``.

    The start vector is drawn from a fixed seed, so the result is
    deterministic.  Iteration stops once ``||A^*A x - mu x|| <= tol * mu``.
    """
    M = as_matrix(A)
    if not np.any(M):
        return 0.0
    rng = np.random.default_rng(0x5EED)
    n = M.shape[1]
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    MH = M.conj().T
    mu = 0.0
    for _ in range(max_iter):
        y = M @ x
        z = MH @ y
        mu = float(np.vdot(y, y).real)
        if np.linalg.norm(z - mu * x) <= tol * mu:
            break
        nz = np.linalg.norm(z)
        if nz == 0.0:
            break
        x = z / nz
    return math.sqrt(mu)


def eps_scale(N: int, n: int) -> float:
    """``sqrt(N) - sqrt(n - 1)``, the natural scale of ``s_n`` for ``N x n``."""
    if n < 1 or N < n:
        raise ValueError(f"need N >= n >= 1, got N={N}, n={n}")
    # rationalized form avoids cancellation when N is close to n - 1
    return (N - (n - 1)) / (math.sqrt(N) + math.sqrt(n - 1))


# --------------------------------------------------------------------------
# eigenvalues
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs of a square matrix.

    ``vectors[:, k]`` is the unit eigenvector for ``values[k]`` and
    ``residuals[k] = ||A v_k - values[k] v_k||``.
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    norm: float
    tol: float

    def __len__(self) -> int:
        return self.values.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self.values[k], self.vectors[:, k], float(self.residuals[k])


def eigen_decompose(A, tol: float = 1e-8) -> Spectrum:
    """Full eigendecomposition of a square matrix.

    Householder Hessenberg reduction, implicitly shifted complex QR with
    exceptional shifts (cap ``30 n`` sweeps), then back-substitution on the
    Schur factor.

    Parameters
    ----------
    A : array_like, shape (n, n)
    tol : float
        Every residual must satisfy ``||Av - lam v|| <= tol * ||A||``.

    Raises
    ------
    ConvergenceError
        QR did not converge; carries the partial Schur form.
    AccuracyError
        Some eigenpair misses the residual bound.
    """
    M = as_matrix(A)
    n = M.shape[0]
    if M.shape[1] != n:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    H = M.copy()
    Z = K.hessenberg(H)
    status, iters, hi = K.schur_qr(H, Z, 30 * n)
    if status != 0:
        raise ConvergenceError(
            f"QR iteration did not converge within {30 * n} sweeps",
            schur=H, vectors=Z, iterations=iters, active_row=hi,
        )
    X = K.triangular_eigvecs(H)
    V = Z @ X
    V /= np.linalg.norm(V, axis=0)
    lam = np.diag(H).copy()

    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    V = V[:, order]
    for k in range(n):
        V[:, k] = canonical_phase(V[:, k])
    res = np.linalg.norm(M @ V - V * lam, axis=0)
    anorm = float(singular_values(M)[0])
    worst = float(res.max())
    if worst > tol * anorm:
        raise AccuracyError(f"eigen residual {worst:.3e} exceeds {tol:.1e} * ||A|| = {tol * anorm:.3e}")
    return Spectrum(values=lam, vectors=V, residuals=res, norm=anorm, tol=tol)


# --------------------------------------------------------------------------
# kernel vectors and distances
# --------------------------------------------------------------------------


def kernel_svd(A):
    """Kernel vector of an ``(n-1) x n`` matrix plus its ``n-1`` singular values.

    Returns
    -------
    v : ndarray, shape (n,)
        Unit right singular vector for the zero singular value, phase
        normalized.
    svals : ndarray, shape (n-1,)
        Singular values of ``A``, descending.
    """
    M = as_matrix(A)
    r, n = M.shape
    if r != n - 1:
        raise ValueError(f"kernel_vector needs rows = cols - 1, got shape {M.shape}")
    P = np.zeros((n, n), dtype=np.complex128)
    P[:r] = M
    d, e, R, betas = K.bidiagonalize(P, True)
    dr, er, rph = K.realify_bidiagonal(d, e)
    y = K.bidiagonal_min_vector(dr, er, 60)
    v = K.apply_right_reflectors(R, betas, rph * y)
    v /= np.linalg.norm(v)
    s = _bidiag_svals(d, e)
    return canonical_phase(v), s[:-1]


def kernel_vector(A) -> np.ndarray:
    """Unit vector orthogonal to every row of an ``(n-1) x n`` matrix."""
    return kernel_svd(A)[0]


def dist_to_subspace(X, basis, v=None) -> float:
    """Distance from ``X`` to the affine subspace ``span(basis) + v``.

    Parameters
    ----------
    X : array_like, shape (N,)
    basis : array_like, shape (k, N)
        Spanning vectors as rows; may be numerically rank-deficient.  Vectors
        whose Gram-Schmidt remainder is at most ``1e-12`` times the largest
        basis norm are treated as dependent.
    v : array_like, shape (N,), optional
        Offset, zero by default.
    """
    x = _as_vector(X, "X")
    N = x.shape[0]
    B = np.array(basis, dtype=np.complex128, order="C")
    if B.ndim == 1:
        B = B.reshape(1, -1)
    if B.size == 0:
        B = np.zeros((0, N), dtype=np.complex128)
    if B.ndim != 2 or B.shape[1] != N:
        raise ValueError(f"basis vectors must have dimension {N}, got shape {B.shape}")
    if v is not None:
        off = _as_vector(v, "v")
        if off.shape[0] != N:
            raise ValueError(f"offset must have dimension {N}, got {off.shape[0]}")
        x = x - off
    if B.shape[0] == 0:
        return float(np.linalg.norm(x))
    thresh = 1e-12 * float(np.max(np.linalg.norm(B, axis=1)))
    Q, rank = K.mgs_orthonormalize(np.ascontiguousarray(B), thresh)
    return float(np.linalg.norm(K.project_out(Q, rank, x)))


# --------------------------------------------------------------------------
# real/complex conversion
# --------------------------------------------------------------------------


def realify_vector(v) -> np.ndarray:
    """``(Re v, Im v)`` stacked into a real vector of twice the length."""
    z = np.asarray(v, dtype=np.complex128).reshape(-1)
    return np.concatenate([z.real, z.imag])


def realify_matrix(M) -> np.ndarray:
    """Real block form ``[[A, -B], [B, A]]`` of ``M = A + iB``."""
    Z = np.asarray(M, dtype=np.complex128)
    A, B = Z.real, Z.imag
    return np.block([[A, -B], [B, A]])


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix(A, field: str | None = None) -> str:
    """Serialize to the ``rows,cols,field`` text format (row-major ``re,im``)."""
    M = as_matrix(A)
    if field is None:
        field = "real" if not np.any(M.imag) else "complex"
    if field not in ("real", "complex"):
        raise ValueError(f"field must be 'real' or 'complex', got {field!r}")
    out = io.StringIO()
    out.write(f"{M.shape[0]},{M.shape[1]},{field}\n")
    for z in M.reshape(-1):
        out.write(f"{_fmt(z.real)},{_fmt(z.imag)}\n")
    return out.getvalue()


def read_matrix(text: str) -> tuple[np.ndarray, str]:
    """Parse the text produced by :func:`write_matrix`; returns ``(A, field)``."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    head = lines[0].split(",")
    if len(head) != 3:
        raise ValueError(f"bad header {lines[0]!r}; expected rows,cols,field")
    rows, cols, field = int(head[0]), int(head[1]), head[2].strip()
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be positive")
    if field not in ("real", "complex"):
        raise ValueError(f"unknown field {field!r}")
    body = lines[1:]
    if len(body) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, found {len(body)}")
    vals = np.empty(rows * cols, dtype=np.complex128)
    for k, ln in enumerate(body):
        re, im = ln.split(",")
        vals[k] = complex(float(re), float(im))
    return vals.reshape(rows, cols), field

