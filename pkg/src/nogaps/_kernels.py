"""Compiled dense kernels behind :mod:`nogaps.linalg`.

Everything here works on C-contiguous ``complex128`` (or ``float64`` for the
bidiagonal stage) arrays and reports failures through integer status codes;
the Python wrappers in :mod:`nogaps.linalg` turn those into exceptions.

Reflectors are the Hermitian kind ``P = I - beta * u u^*`` with
``beta = 2 / ||u||^2``, so every reflector is its own inverse.
"""

import numpy as np
from numba import njit

EPS = np.finfo(np.float64).eps
TINY = np.finfo(np.float64).tiny


@njit(cache=True, nogil=True)
def _abs1(z):
    return abs(z.real) + abs(z.imag)


@njit(cache=True, nogil=True)
def _phase(z):
    a = abs(z)
    if a == 0.0:
        return 1.0 + 0.0j
    return z / a


@njit(cache=True, nogil=True)
def _givens(x, y):
    """Return ``(c, s, r)`` with ``[[c, s], [-conj(s), c]] @ [x, y] = [r, 0]``.

    ``c`` is real, ``s`` and ``r`` complex.
    """
    ax = abs(x)
    ay = abs(y)
    if ay == 0.0:
        return 1.0, 0.0 + 0.0j, x
    if ax == 0.0:
        return 0.0, np.conj(y) / ay, ay + 0.0j
    nrm = np.hypot(ax, ay)
    ph = x / ax
    return ax / nrm, ph * np.conj(y) / nrm, ph * nrm


@njit(cache=True, nogil=True)
def _real_givens(f, g):
    """Real rotation with ``c*f + s*g = r`` and ``-s*f + c*g = 0``."""
    if g == 0.0:
        return 1.0, 0.0, f
    if f == 0.0:
        return 0.0, 1.0, g
    r = np.hypot(f, g)
    return f / r, g / r, r


# ---------------------------------------------------------------------------
# Hessenberg reduction and complex Schur form
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def hessenberg(A):
    """Reduce ``A`` to upper Hessenberg form ``H = Z^* A Z`` in place.

    Returns the accumulated unitary ``Z``.
    """
    n = A.shape[0]
    Z = np.eye(n, dtype=np.complex128)
    u = np.empty(n, dtype=np.complex128)
    w = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        m = n - k - 1
        tail = 0.0
        for i in range(1, m):
            z = A[k + 1 + i, k]
            tail += z.real * z.real + z.imag * z.imag
        if tail == 0.0:
            continue
        alpha = A[k + 1, k]
        nrm = np.sqrt(tail + alpha.real * alpha.real + alpha.imag * alpha.imag)
        ph = _phase(alpha)
        for i in range(m):
            u[i] = A[k + 1 + i, k]
        u[0] += ph * nrm
        beta = 1.0 / (nrm * (nrm + abs(alpha)))
        # left: rows k+1.., columns k..
        for j in range(k, n):
            w[j] = 0.0
        for i in range(m):
            cu = np.conj(u[i])
            for j in range(k, n):
                w[j] += cu * A[k + 1 + i, j]
        for i in range(m):
            bu = beta * u[i]
            for j in range(k, n):
                A[k + 1 + i, j] -= bu * w[j]
        # right: all rows, columns k+1..
        for i in range(n):
            s = 0.0j
            for j in range(m):
                s += A[i, k + 1 + j] * u[j]
            s *= beta
            for j in range(m):
                A[i, k + 1 + j] -= s * np.conj(u[j])
        for i in range(n):
            s = 0.0j
            for j in range(m):
                s += Z[i, k + 1 + j] * u[j]
            s *= beta
            for j in range(m):
                Z[i, k + 1 + j] -= s * np.conj(u[j])
        A[k + 1, k] = -ph * nrm
        for i in range(k + 2, n):
            A[i, k] = 0.0
    return Z


@njit(cache=True, nogil=True)
def _wilkinson(a, b, c, d):
    p = 0.5 * (a - d)
    disc = np.sqrt(p * p + b * c)
    den1 = p + disc
    den2 = p - disc
    den = den1 if abs(den1) >= abs(den2) else den2
    if den == 0.0:
        return d
    return d - (b * c) / den


@njit(cache=True, nogil=True)
def schur_qr(H, Z, maxit):
    """Implicitly shifted complex QR on a Hessenberg matrix, in place.

    On success ``H`` holds the upper triangular Schur factor ``T`` and ``Z``
    the Schur vectors, ``A = Z T Z^*``.  Returns ``(status, iterations, hi)``:
    status 0 on convergence, 1 when ``maxit`` sweeps were spent; ``hi`` is the
    last row of the still-unreduced window on failure.
    """
    n = H.shape[0]
    smlnum = TINY * (n / EPS)
    hi = n - 1
    total = 0
    its = 0
    while hi >= 0:
        lo = 0
        for k in range(hi, 0, -1):
            h = _abs1(H[k, k - 1])
            if h <= smlnum:
                lo = k
                break
            tst = _abs1(H[k - 1, k - 1]) + _abs1(H[k, k])
            if tst == 0.0:
                if k - 2 >= 0:
                    tst += abs(H[k - 1, k - 2].real)
                if k + 1 <= hi:
                    tst += abs(H[k + 1, k].real)
            if h <= EPS * tst:
                lo = k
                break
        if lo > 0:
            H[lo, lo - 1] = 0.0
        if lo == hi:
            hi -= 1
            its = 0
            continue
        if total >= maxit:
            return 1, total, hi
        total += 1
        its += 1

        if its % 20 == 10:
            mu = 0.75 * abs(H[lo + 1, lo].real) + H[lo, lo]
        elif its % 20 == 0:
            mu = 0.75 * abs(H[hi, hi - 1].real) + H[hi, hi]
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])

        for k in range(lo, hi):
            if k == lo:
                x = H[lo, lo] - mu
                y = H[lo + 1, lo]
            else:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            c, s, r = _givens(x, y)
            if k > lo:
                H[k, k - 1] = r
                H[k + 1, k - 1] = 0.0
            cs = np.conj(s)
            for j in range(k, n):
                a = H[k, j]
                b = H[k + 1, j]
                H[k, j] = c * a + s * b
                H[k + 1, j] = -cs * a + c * b
            top = k + 2 if k + 2 < hi else hi
            for i in range(top + 1):
                a = H[i, k]
                b = H[i, k + 1]
                H[i, k] = c * a + cs * b
                H[i, k + 1] = -s * a + c * b
            for i in range(n):
                a = Z[i, k]
                b = Z[i, k + 1]
                Z[i, k] = c * a + cs * b
                Z[i, k + 1] = -s * a + c * b
    return 0, total, -1


@njit(cache=True, nogil=True)
def triangular_eigvecs(T):
    """Eigenvectors of an upper triangular ``T`` by back-substitution.

    Column ``k`` of the result solves ``(T - T[k, k]) x = 0`` with
    ``x[k] = 1`` and ``x[k+1:] = 0``.  Near-zero pivots are perturbed to
    ``eps * ||T||`` so clustered eigenvalues still give finite vectors.
    """
    n = T.shape[0]
    X = np.zeros((n, n), dtype=np.complex128)
    tnorm = 0.0
    for i in range(n):
        for j in range(i, n):
            tnorm = max(tnorm, _abs1(T[i, j]))
    smin = max(EPS * tnorm, smlnum_for(n))
    big = 1e150
    for k in range(n):
        lam = T[k, k]
        X[k, k] = 1.0
        for i in range(k - 1, -1, -1):
            s = T[i, k]
            for j in range(i + 1, k):
                s += T[i, j] * X[j, k]
            den = T[i, i] - lam
            if _abs1(den) < smin:
                den = smin
            X[i, k] = -s / den
            if _abs1(X[i, k]) > big:
                scale = 1.0 / _abs1(X[i, k])
                for j in range(i, k + 1):
                    X[j, k] *= scale
    return X


@njit(cache=True, nogil=True)
def smlnum_for(n):
    return TINY * (n / EPS)


# ---------------------------------------------------------------------------
# Golub-Kahan bidiagonalization and bidiagonal QR
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def bidiagonalize(A, want_v):
    """Householder bidiagonalization ``A = U B V^*`` of ``A`` (m x n, m >= n).

    ``A`` is overwritten.  Returns complex diagonal ``d`` (n), superdiagonal
    ``e`` (n - 1), and, when ``want_v``, the right reflectors packed as rows
    of ``R`` with their ``beta`` factors (reflector ``k`` acts on
    coordinates ``k+1..n-1``).
    """
    m, n = A.shape
    d = np.zeros(n, dtype=np.complex128)
    e = np.zeros(max(n - 1, 0), dtype=np.complex128)
    R = np.zeros((n if want_v else 0, n), dtype=np.complex128)
    betas = np.zeros(n)
    u = np.empty(m, dtype=np.complex128)
    w = np.empty(n, dtype=np.complex128)
    z = np.empty(m, dtype=np.complex128)
    for k in range(n):
        # left reflector on column k
        ml = m - k
        tail = 0.0
        for i in range(1, ml):
            t = A[k + i, k]
            tail += t.real * t.real + t.imag * t.imag
        alpha = A[k, k]
        if tail == 0.0:
            d[k] = alpha
        else:
            nrm = np.sqrt(tail + alpha.real * alpha.real + alpha.imag * alpha.imag)
            ph = _phase(alpha)
            for i in range(ml):
                u[i] = A[k + i, k]
            u[0] += ph * nrm
            beta = 1.0 / (nrm * (nrm + abs(alpha)))
            for j in range(k + 1, n):
                w[j] = 0.0
            for i in range(ml):
                cu = np.conj(u[i])
                for j in range(k + 1, n):
                    w[j] += cu * A[k + i, j]
            for i in range(ml):
                bu = beta * u[i]
                for j in range(k + 1, n):
                    A[k + i, j] -= bu * w[j]
            d[k] = -ph * nrm
        if k >= n - 1:
            continue
        # right reflector on row k, columns k+1..n-1 (acts on conj of the row)
        mr = n - k - 1
        tail = 0.0
        for j in range(1, mr):
            t = A[k, k + 1 + j]
            tail += t.real * t.real + t.imag * t.imag
        alpha = np.conj(A[k, k + 1])
        if tail == 0.0:
            e[k] = A[k, k + 1]
            continue
        nrm = np.sqrt(tail + alpha.real * alpha.real + alpha.imag * alpha.imag)
        ph = _phase(alpha)
        for j in range(mr):
            w[j] = np.conj(A[k, k + 1 + j])
        w[0] += ph * nrm
        beta = 1.0 / (nrm * (nrm + abs(alpha)))
        for i in range(k + 1, m):
            s = 0.0j
            for j in range(mr):
                s += A[i, k + 1 + j] * w[j]
            z[i] = beta * s
        for i in range(k + 1, m):
            zi = z[i]
            for j in range(mr):
                A[i, k + 1 + j] -= zi * np.conj(w[j])
        e[k] = np.conj(-ph * nrm)
        if want_v:
            for j in range(mr):
                R[k, k + 1 + j] = w[j]
            betas[k] = beta
    return d, e, R, betas


@njit(cache=True, nogil=True)
def apply_right_reflectors(R, betas, y):
    """Return ``V @ y`` for ``V = P_0 P_1 ... P_{n-2}`` stored by ``bidiagonalize``."""
    n = y.shape[0]
    x = y.astype(np.complex128)
    for k in range(n - 2, -1, -1):
        beta = betas[k]
        if beta == 0.0:
            continue
        s = 0.0j
        for j in range(k + 1, n):
            s += np.conj(R[k, j]) * x[j]
        s *= beta
        for j in range(k + 1, n):
            x[j] -= s * R[k, j]
    return x


@njit(cache=True, nogil=True)
def realify_bidiagonal(d, e):
    """Unitary diagonal scaling of a complex bidiagonal to a nonnegative one.

    Returns ``(dr, er, rph)`` with ``L^* B diag(rph) = Breal`` for some
    diagonal unitary ``L``.
    """
    n = d.shape[0]
    dr = np.zeros(n)
    er = np.zeros(max(n - 1, 0))
    rph = np.ones(n, dtype=np.complex128)
    for i in range(n):
        li = _phase(d[i] * rph[i])
        dr[i] = abs(d[i])
        if i < n - 1:
            t = np.conj(li) * e[i]
            rph[i + 1] = np.conj(_phase(t))
            er[i] = abs(t)
    return dr, er, rph


@njit(cache=True, nogil=True)
def bidiagonal_svals(d, e, maxit):
    """Singular values of the real upper bidiagonal ``(d, e)`` by shifted QR.

    Works in place.  Returns ``(status, sweeps)``; afterwards ``|d|`` holds
    the singular values in no particular order.
    """
    n = d.shape[0]
    scale = 0.0
    for i in range(n):
        scale = max(scale, abs(d[i]))
    for i in range(n - 1):
        scale = max(scale, abs(e[i]))
    if scale == 0.0:
        return 0, 0
    tol = EPS * scale
    hi = n - 1
    sweeps = 0
    while hi > 0:
        if abs(e[hi - 1]) <= tol or abs(e[hi - 1]) <= EPS * (abs(d[hi - 1]) + abs(d[hi])):
            e[hi - 1] = 0.0
            hi -= 1
            continue
        lo = hi - 1
        while lo > 0:
            if abs(e[lo - 1]) <= tol or abs(e[lo - 1]) <= EPS * (abs(d[lo - 1]) + abs(d[lo])):
                e[lo - 1] = 0.0
                break
            lo -= 1
        if sweeps >= maxit:
            return 1, sweeps
        sweeps += 1

        zk = -1
        for k in range(lo, hi + 1):
            if abs(d[k]) <= tol:
                zk = k
                break
        if zk >= 0:
            d[zk] = 0.0
            if zk < hi:
                f = e[zk]
                e[zk] = 0.0
                for j in range(zk + 1, hi + 1):
                    c, s, r = _real_givens(d[j], f)
                    d[j] = r
                    if j < hi:
                        f = -s * e[j]
                        e[j] = c * e[j]
            else:
                f = e[hi - 1]
                e[hi - 1] = 0.0
                for j in range(hi - 1, lo - 1, -1):
                    c, s, r = _real_givens(d[j], f)
                    d[j] = r
                    if j > lo:
                        f = -s * e[j - 1]
                        e[j - 1] = c * e[j - 1]
            continue

        # Wilkinson shift from the trailing 2x2 of B^T B
        a = d[hi - 1] * d[hi - 1]
        if hi - 1 > lo:
            a += e[hi - 2] * e[hi - 2]
        b = d[hi - 1] * e[hi - 1]
        cc = d[hi] * d[hi] + e[hi - 1] * e[hi - 1]
        dl = 0.5 * (a - cc)
        if dl == 0.0 and b == 0.0:
            mu = cc
        else:
            sg = 1.0 if dl >= 0.0 else -1.0
            mu = cc - b * b / (dl + sg * np.hypot(dl, b))

        y = d[lo] * d[lo] - mu
        z = d[lo] * e[lo]
        for k in range(lo, hi):
            c, s, r = _real_givens(y, z)
            if k > lo:
                e[k - 1] = r
            dk = d[k]
            ek = e[k]
            d[k] = c * dk + s * ek
            e[k] = -s * dk + c * ek
            z = s * d[k + 1]
            d[k + 1] = c * d[k + 1]
            c, s, r = _real_givens(d[k], z)
            d[k] = r
            ek = e[k]
            dk1 = d[k + 1]
            e[k] = c * ek + s * dk1
            d[k + 1] = -s * ek + c * dk1
            if k < hi - 1:
                z = s * e[k + 1]
                e[k + 1] = c * e[k + 1]
            y = e[k]
    return 0, sweeps


@njit(cache=True, nogil=True)
def bidiagonal_min_vector(d, e, iters):
    """Right singular vector for the smallest singular value of ``(d, e)``.

    Inverse iteration ``y <- B^{-1} B^{-T} y`` with pivots clamped at
    ``eps * ||B||``; cheap (O(n) per step) and backward stable.
    """
    n = d.shape[0]
    scale = 0.0
    for i in range(n):
        scale = max(scale, abs(d[i]))
    for i in range(n - 1):
        scale = max(scale, abs(e[i]))
    if scale == 0.0:
        scale = 1.0
    floor = EPS * scale
    dd = d.copy()
    for i in range(n):
        if abs(dd[i]) < floor:
            dd[i] = floor if dd[i] >= 0.0 else -floor
    y = np.empty(n)
    for i in range(n):
        y[i] = 1.0 + 0.5 * np.sin(1.0 + 7.0 * i)
    nrm = np.sqrt(np.sum(y * y))
    y /= nrm
    w = np.empty(n)
    prev = np.inf
    for _ in range(iters):
        # B^T w = y (lower bidiagonal, forward)
        w[0] = y[0] / dd[0]
        for i in range(1, n):
            w[i] = (y[i] - e[i - 1] * w[i - 1]) / dd[i]
        nrm = np.sqrt(np.sum(w * w))
        w /= nrm
        # B y = w (upper bidiagonal, backward)
        y[n - 1] = w[n - 1] / dd[n - 1]
        for i in range(n - 2, -1, -1):
            y[i] = (w[i] - e[i] * y[i + 1]) / dd[i]
        nrm = np.sqrt(np.sum(y * y))
        y /= nrm
        # residual ||B y||
        res = 0.0
        for i in range(n):
            t = d[i] * y[i]
            if i < n - 1:
                t += e[i] * y[i + 1]
            res += t * t
        res = np.sqrt(res)
        if res >= prev * (1.0 - 1e-3):
            break
        prev = res
    return y


# ---------------------------------------------------------------------------
# Gram-Schmidt
# ---------------------------------------------------------------------------


# Reassociation lets the inner products vectorize; results stay identical
# from run to run because the compiled reduction order is fixed.
_FAST = {"reassoc", "contract"}


@njit(cache=True, nogil=True, fastmath=_FAST)
def mgs_orthonormalize(B, thresh):
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Rows of ``B`` are the spanning vectors.  Vectors whose remainder falls
    to ``thresh`` or below are dropped.  Returns ``(Q, rank)`` with the
    first ``rank`` rows of ``Q`` orthonormal.
    """
    k, N = B.shape
    # real and imaginary parts kept apart so the loops run on doubles
    Qr = np.zeros((k, N))
    Qi = np.zeros((k, N))
    qr = np.empty(N)
    qi = np.empty(N)
    rank = 0
    for i in range(k):
        for t in range(N):
            qr[t] = B[i, t].real
            qi[t] = B[i, t].imag
        for _ in range(2):
            for j in range(rank):
                sr = 0.0
                si = 0.0
                for t in range(N):
                    sr += Qr[j, t] * qr[t] + Qi[j, t] * qi[t]
                    si += Qr[j, t] * qi[t] - Qi[j, t] * qr[t]
                for t in range(N):
                    qr[t] -= sr * Qr[j, t] - si * Qi[j, t]
                    qi[t] -= sr * Qi[j, t] + si * Qr[j, t]
        nrm = 0.0
        for t in range(N):
            nrm += qr[t] * qr[t] + qi[t] * qi[t]
        nrm = np.sqrt(nrm)
        if nrm > thresh:
            for t in range(N):
                Qr[rank, t] = qr[t] / nrm
                Qi[rank, t] = qi[t] / nrm
            rank += 1
    Q = np.zeros((k, N), dtype=np.complex128)
    for j in range(rank):
        for t in range(N):
            Q[j, t] = complex(Qr[j, t], Qi[j, t])
    return Q, rank


@njit(cache=True, nogil=True, fastmath=_FAST)
def project_out(Q, rank, x):
    """Remainder of ``x`` after MGS projection (twice) onto rows ``Q[:rank]``."""
    N = x.shape[0]
    rr = np.empty(N)
    ri = np.empty(N)
    for t in range(N):
        rr[t] = x[t].real
        ri[t] = x[t].imag
    Qr = np.empty((rank, N))
    Qi = np.empty((rank, N))
    for j in range(rank):
        for t in range(N):
            Qr[j, t] = Q[j, t].real
            Qi[j, t] = Q[j, t].imag
    for _ in range(2):
        for j in range(rank):
            sr = 0.0
            si = 0.0
            for t in range(N):
                sr += Qr[j, t] * rr[t] + Qi[j, t] * ri[t]
                si += Qr[j, t] * ri[t] - Qi[j, t] * rr[t]
            for t in range(N):
                rr[t] -= sr * Qr[j, t] - si * Qi[j, t]
                ri[t] -= sr * Qi[j, t] + si * Qr[j, t]
    r = np.empty(N, dtype=np.complex128)
    for t in range(N):
        r[t] = complex(rr[t], ri[t])
    return r
