"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np


def jacobi_hermitian_eigvals(G: np.ndarray, sweeps: int = 60, tol: float = 1e-15) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations."""
    A = np.array(G, dtype=np.complex128)
    n = A.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(sum(abs(A[p, q]) ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol * max(np.linalg.norm(A), 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) == 0.0:
                    continue
                # reduce to a real symmetric 2x2 by a diagonal phase
                phase = apq / abs(apq)
                app, aqq = A[p, p].real, A[q, q].real
                tau = (aqq - app) / (2.0 * abs(apq))
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                J = np.eye(n, dtype=np.complex128)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s * phase
                J[q, p] = -s * np.conj(phase)
                A = J.conj().T @ A @ J
    return np.sort(np.diag(A).real)


def gram_singular_values(A: np.ndarray) -> np.ndarray:
    """Singular values as square roots of the Jacobi eigenvalues of ``A^* A`` (descending)."""
    A = np.asarray(A, dtype=np.complex128)
    ev = jacobi_hermitian_eigvals(A.conj().T @ A)
    return np.sqrt(np.clip(ev, 0.0, None))[::-1]


def normal_equations_distance(X, basis) -> float:
    """Least-squares residual via the Gram matrix, with a pseudo-inverse."""
    B = np.asarray(basis, dtype=np.complex128).T
    G = B.conj().T @ B
    c = np.linalg.pinv(G, rcond=1e-12, hermitian=True) @ (B.conj().T @ np.asarray(X))
    return float(np.linalg.norm(np.asarray(X) - B @ c))


def brute_force_complex_lcd(a, alpha: float, gamma: float, r_max: float, step: float = 1e-4) -> float:
    """Complex LCD by enumerating Gaussian-integer points and scanning radius.

    For a lattice point ``z`` and ``|theta| = r`` the best angle gives
    ``dist^2 = r^2 ||a||^2 - 2 r |<a, z>| + ||z||^2`` exactly.  The radius is
    scanned on the grid ``step, 2 step, ...``; the smallest grid radius
    feasible for some ``z`` is returned (``inf`` if none up to ``r_max``).
    """
    a = np.asarray(a, dtype=np.complex128)
    na2 = float(np.sum(np.abs(a) ** 2))
    coords = []
    for ak in a:
        R = r_max * abs(ak) + alpha
        span = range(-int(math.ceil(R)), int(math.ceil(R)) + 1)
        pts = [complex(x, y) for x in span for y in span if abs(complex(x, y)) < R + 1e-9]
        coords.append(np.array(pts))
    Z = np.array(list(itertools.product(*coords)))
    w = np.abs(Z.conj() @ a)
    z2 = np.sum(np.abs(Z) ** 2, axis=1)

    def below(A, B, C):
        # open interval where A r^2 - 2 B r + C < 0 (empty -> (inf, -inf))
        disc = B * B - A * C
        ok = disc > 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        lo = np.where(ok, (B - root) / A, np.inf)
        hi = np.where(ok, (B + root) / A, -np.inf)
        return lo, hi

    lo1, hi1 = below((1 - gamma**2) * na2, w, z2)
    lo2, hi2 = below(na2, w, z2 - alpha**2)
    lo = np.maximum(np.maximum(lo1, lo2), 0.0)
    hi = np.minimum(hi1, hi2)
    # first scan radius k * step strictly inside (lo, hi)
    k = np.floor(lo / step) + 1
    first = np.where(np.isfinite(lo), k * step, np.inf)
    first = first[(first < hi) & (first <= r_max)]
    return float(first.min()) if first.size else math.inf
