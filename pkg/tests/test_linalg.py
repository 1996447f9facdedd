import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nogaps.linalg import (AccuracyError, ConvergenceError, canonical_phase, column_submatrix,
                           dist_to_subspace, eigen_decompose, eps_scale, kernel_vector,
                           operator_norm, read_matrix, realify_matrix, realify_vector, shift,
                           singular_values, smallest_singular_value, write_matrix)
from oracles import gram_singular_values, jacobi_hermitian_eigvals, normal_equations_distance


def cgauss(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# -- shift / submatrix ------------------------------------------------------

def test_shift_square():
    assert np.array_equal(shift(np.zeros((2, 2)), 1), -np.eye(2))


def test_shift_rectangular():
    B = shift(np.zeros((3, 2)), 1j)
    expect = np.zeros((3, 2), complex)
    expect[0, 0] = expect[1, 1] = -1j
    assert np.array_equal(B, expect)


dyadic = st.integers(-2**20, 2**20).map(lambda k: k / 1024)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.data(), dyadic, dyadic)
def test_shift_involution_exact(r, c, data, lr, li):
    # dyadic entries keep every sum representable, so the round trip is exact
    re_ = data.draw(st.lists(dyadic, min_size=r * c, max_size=r * c))
    im_ = data.draw(st.lists(dyadic, min_size=r * c, max_size=r * c))
    A = (np.array(re_) + 1j * np.array(im_)).reshape(r, c)
    lam = complex(lr, li)
    assert np.array_equal(shift(shift(A, lam), -lam), A)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1),
       st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_shift_round_trip_general(seed, lam):
    A = cgauss(np.random.default_rng(seed), 3, 4)
    err = np.abs(shift(shift(A, lam), -lam) - A)
    assert np.all(err <= 4 * np.finfo(float).eps * (abs(lam) + np.abs(A)))


def test_column_submatrix_examples():
    I = np.eye(3)
    assert np.array_equal(column_submatrix(I, [1]), I[:, [1]])
    A = cgauss(np.random.default_rng(0), 3, 3)
    assert np.array_equal(column_submatrix(A, range(3)), A)
    assert np.array_equal(column_submatrix(A, [2, 0]), A[:, [0, 2]])


def test_column_submatrix_composition():
    A = cgauss(np.random.default_rng(1), 4, 4)
    J = [0, 2, 3]
    K = [1, 2]
    assert np.array_equal(column_submatrix(column_submatrix(A, J), K),
                          A[:, [J[k] for k in K]])


@pytest.mark.parametrize("J", [[], [0, 0], [3], [-1]])
def test_column_submatrix_rejects(J):
    with pytest.raises(ValueError):
        column_submatrix(np.eye(3), J)


# -- eigen ------------------------------------------------------------------

def test_eigen_diagonal():
    sp = eigen_decompose(np.diag([2.0, 3.0]))
    assert np.allclose(sp.values, [2, 3])
    assert np.allclose(sp.vectors, np.eye(2))


def test_eigen_swap():
    sp = eigen_decompose([[0, 1], [1, 0]])
    assert np.allclose(sp.values, [-1, 1])
    r = 1 / math.sqrt(2)
    assert np.allclose(sp.vectors[:, 0], [r, -r])
    assert np.allclose(sp.vectors[:, 1], [r, r])


def test_eigen_companion_roots_of_unity():
    C = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=complex)
    sp = eigen_decompose(C)
    roots = sorted(np.roots([1, 0, 0, -1]), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    expect = [cmath.exp(2j * math.pi * k / 3) for k in range(3)]
    for z in roots:
        assert min(abs(z - e) for e in expect) < 1e-12
    assert np.allclose(sp.values, roots, atol=1e-12)
    assert np.all(sp.residuals <= 1e-10)


def test_eigen_contract_random():
    rng = np.random.default_rng(2)
    A = cgauss(rng, 40, 40)
    sp = eigen_decompose(A)
    assert len(sp) == 40
    assert np.allclose(np.linalg.norm(sp.vectors, axis=0), 1, atol=1e-12)
    assert np.all(sp.residuals <= 1e-8 * sp.norm)
    recomputed = np.linalg.norm(A @ sp.vectors - sp.vectors * sp.values, axis=0)
    assert np.allclose(recomputed, sp.residuals, rtol=1e-6, atol=1e-14)
    keys = list(zip(sp.values.real, sp.values.imag))
    assert keys == sorted(keys)
    for k in range(40):
        v = sp.vectors[:, k]
        i = int(np.argmax(np.abs(v)))
        assert v[i].imag == 0 and v[i].real >= 0
    assert abs(np.trace(A) - sp.values.sum()) <= 1e-8 * 40 * sp.norm
    # independent comparison with LAPACK eigenvalues
    ref = np.sort_complex(np.linalg.eigvals(A))
    assert np.allclose(np.sort_complex(sp.values), ref, atol=1e-9)


def test_eigen_permutation_similarity():
    rng = np.random.default_rng(3)
    A = cgauss(rng, 12, 12)
    perm = rng.permutation(12)
    B = A[perm][:, perm]
    sa, sb = eigen_decompose(A), eigen_decompose(B)
    assert np.allclose(sa.values, sb.values, atol=1e-10)
    for k in range(12):
        # P^T v_B is an eigenvector of A with the same canonical phase
        back = np.empty(12, complex)
        back[perm] = sb.vectors[:, k]
        assert np.allclose(canonical_phase(back), sa.vectors[:, k], atol=1e-8)


def test_eigen_repeat_is_bitwise_identical():
    A = cgauss(np.random.default_rng(4), 20, 20)
    perm = np.random.default_rng(5).permutation(20)
    inv = np.argsort(perm)
    s1 = eigen_decompose(A)
    s2 = eigen_decompose(A[perm][inv])
    assert s1.vectors.tobytes() == s2.vectors.tobytes()
    assert s1.values.tobytes() == s2.values.tobytes()


def test_eigen_rejects_non_square_and_nonfinite():
    with pytest.raises(ValueError):
        eigen_decompose(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        eigen_decompose([[np.nan]])


def test_eigen_residual_bound_enforced():
    with pytest.raises(AccuracyError):
        eigen_decompose(np.random.default_rng(6).standard_normal((10, 10)), tol=1e-30)


def test_convergence_error_carries_schur_form():
    err = ConvergenceError("x", schur=np.eye(2), vectors=np.eye(2), iterations=60, active_row=1)
    assert err.schur.shape == (2, 2) and err.iterations == 60


def test_eigen_defective_matrix_residual_only():
    J = np.array([[1.0, 1.0], [0.0, 1.0]])
    sp = eigen_decompose(J)
    assert np.allclose(sp.values, [1, 1])
    assert np.all(sp.residuals <= 1e-8 * sp.norm)


# -- singular values --------------------------------------------------------

def test_smin_examples():
    assert smallest_singular_value(np.eye(2)) == pytest.approx(1, abs=1e-15)
    assert smallest_singular_value(shift(np.diag([3.0, 1.0]), 1)) == 0.0


def test_smin_rejects_wide():
    with pytest.raises(ValueError):
        smallest_singular_value(np.zeros((2, 3)) + 1)


def test_smin_matches_jacobi_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        A = cgauss(rng, 8, 5)
        ref = gram_singular_values(A)[-1]
        assert abs(smallest_singular_value(A) - ref) <= 1e-8 * ref


def test_jacobi_oracle_sanity():
    H = np.array([[2, 1j], [-1j, 2]])
    assert np.allclose(jacobi_hermitian_eigvals(H), [1, 3], atol=1e-14)


def test_singular_values_match_lapack():
    rng = np.random.default_rng(8)
    for shape in [(1, 1), (3, 1), (1, 4), (30, 17), (25, 25)]:
        A = cgauss(rng, *shape)
        assert np.allclose(singular_values(A), np.linalg.svd(A, compute_uv=False), rtol=1e-12,
                           atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(1, 6))
def test_smin_column_submatrix_monotone(seed, cols, extra):
    rng = np.random.default_rng(seed)
    A = cgauss(rng, cols + extra, cols)
    J = sorted(rng.choice(cols, size=max(1, cols // 2), replace=False))
    sub = smallest_singular_value(column_submatrix(A, J))
    full = smallest_singular_value(A)
    assert sub >= full * (1 - 1e-10) - 1e-12
    assert sub == pytest.approx(gram_singular_values(column_submatrix(A, J))[-1], rel=1e-8)


def test_operator_norm_examples():
    assert operator_norm(np.zeros((3, 3))) == 0.0
    assert operator_norm(np.diag([2.0, -5.0])) == pytest.approx(5, rel=1e-12)


def test_operator_norm_matches_gram_svd():
    A = cgauss(np.random.default_rng(9), 20, 7)
    assert operator_norm(A) == pytest.approx(gram_singular_values(A)[0], rel=1e-8)


def test_eps_scale_square_range():
    for n in [1, 2, 10, 1000]:
        s = eps_scale(n, n)
        assert 1 / (2 * math.sqrt(n)) <= s <= 1 / math.sqrt(n)
    assert eps_scale(41, 40) == pytest.approx(math.sqrt(41) - math.sqrt(39), rel=1e-14)


# -- kernel / distance --------------------------------------------------------

def test_kernel_vector_examples():
    v = kernel_vector([[1.0, 0.0]])
    assert np.allclose(np.abs(v), [0, 1])
    v = kernel_vector(np.eye(3)[:2])
    assert np.allclose(v, [0, 0, 1])


def test_kernel_vector_random_residual():
    A = cgauss(np.random.default_rng(10), 99, 100)
    v = kernel_vector(A)
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    assert np.linalg.norm(A @ v) <= 1e-8 * np.linalg.norm(A, 2)


def test_kernel_vector_shape_checked():
    with pytest.raises(ValueError):
        kernel_vector(np.ones((2, 2)))


def test_dist_examples():
    assert dist_to_subspace([1, 2, 2], [[1, 0, 0]]) == pytest.approx(math.sqrt(8), abs=1e-15)
    X = np.array([1.0, 2.0, 0.0])
    assert dist_to_subspace(X, [[1, 0, 0], [0, 1, 0]]) <= 1e-12 * np.linalg.norm(X)


def test_dist_offset_and_mismatch():
    assert dist_to_subspace([1, 1], [[1, 0]], v=[0, 1]) == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        dist_to_subspace([1, 2], [[1, 0, 0]])


def test_dist_matches_normal_equations():
    rng = np.random.default_rng(11)
    for _ in range(20):
        N, k = 12, 5
        B = cgauss(rng, k, N)
        X = cgauss(rng, N)
        assert abs(dist_to_subspace(X, B) - normal_equations_distance(X, B)) <= 1e-10


def test_dist_rank_deficient_basis():
    rng = np.random.default_rng(12)
    B = cgauss(rng, 3, 8)
    B = np.vstack([B, B[0] + 2 * B[1]])
    X = cgauss(rng, 8)
    assert dist_to_subspace(X, B) == pytest.approx(normal_equations_distance(X, B[:3]), abs=1e-10)


# -- realification ------------------------------------------------------------

def test_realify_vector_example():
    assert np.array_equal(realify_vector([1 + 2j]), [1.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_realify_isometry(seed, n):
    rng = np.random.default_rng(seed)
    x, y = cgauss(rng, n), cgauss(rng, n)
    assert np.linalg.norm(x - y) == pytest.approx(np.linalg.norm(realify_vector(x) - realify_vector(y)),
                                                  rel=1e-13)


def test_realify_matrix_product():
    rng = np.random.default_rng(13)
    M, x = cgauss(rng, 3, 3), cgauss(rng, 3)
    assert np.max(np.abs(realify_matrix(M) @ realify_vector(x) - realify_vector(M @ x))) <= 1e-13


# -- text format ----------------------------------------------------------------

def test_matrix_text_round_trip():
    A = cgauss(np.random.default_rng(14), 3, 4) * 1e-7
    B, field = read_matrix(write_matrix(A))
    assert field == "complex"
    assert A.tobytes() == B.tobytes()
    text = write_matrix(np.eye(2))
    assert text.splitlines()[0] == "2,2,real"
    assert text.splitlines()[1] == "1,0"


def test_read_matrix_rejects_short_body():
    with pytest.raises(ValueError):
        read_matrix("2,2,real\n1,0\n")
