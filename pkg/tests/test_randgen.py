import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from nogaps.randgen import (DISTRIBUTIONS, EntryDistribution, MatrixEnsemble, SeedStream,
                            derive_stream, sample_matrix, sample_unit_sphere)


def test_derive_stream_is_deterministic():
    a = derive_stream(7, 3).generator().random(8)
    b = derive_stream(7, 3).generator().random(8)
    assert np.array_equal(a, b)


def test_distinct_indices_give_distinct_streams():
    a = derive_stream(7, 3).generator().random(8)
    b = derive_stream(7, 4).generator().random(8)
    assert not np.array_equal(a, b)


def test_stream_outputs_pass_uniformity_chi_square():
    u = derive_stream(7, 0).generator().random(10**5)
    counts = np.bincount((u * 100).astype(int), minlength=100)
    assert stats.chisquare(counts).pvalue > 1e-3


@pytest.mark.parametrize("bad", [-1, 2**64])
def test_seed_must_be_u64(bad):
    with pytest.raises(ValueError):
        SeedStream(bad, 0)


def test_rademacher_complex_support():
    A = sample_matrix(MatrixEnsemble("complex", 2, 2, "rademacher"), derive_stream(1, 0))
    assert set(np.abs(A.real).ravel()) == {1.0}
    assert set(np.abs(A.imag).ravel()) == {1.0}


def test_sample_matrix_bit_identical():
    ens = MatrixEnsemble("complex", 5, 3)
    A = sample_matrix(ens, derive_stream(11, 2))
    B = sample_matrix(ens, derive_stream(11, 2))
    assert A.tobytes() == B.tobytes()


def test_draw_order_row_major_real_then_imag():
    ens = MatrixEnsemble("complex", 2, 3)
    A = sample_matrix(ens, derive_stream(5, 0))
    raw = derive_stream(5, 0).generator().standard_normal(12)
    assert np.array_equal(A.real.ravel(), raw[0::2])
    assert np.array_equal(A.imag.ravel(), raw[1::2])


def test_gaussian_entry_means():
    A = sample_matrix(MatrixEnsemble("complex", 100, 100), derive_stream(3, 0))
    tol = 4 / math.sqrt(10**4)
    assert abs(A.real.mean()) < tol
    assert abs(A.imag.mean()) < tol


@pytest.mark.parametrize("kind", DISTRIBUTIONS)
def test_entry_moments(kind):
    T = 10**5
    x = EntryDistribution(kind).draw(derive_stream(9, 1).generator(), T)
    assert abs(x.mean()) < 4 / math.sqrt(T)
    assert abs(x.var() - 1) < 5 / math.sqrt(T)


@pytest.mark.parametrize("kind", DISTRIBUTIONS)
def test_subgaussian_bound_dominates_tail(kind):
    dist = EntryDistribution(kind)
    B = dist.subgaussian_bound
    assert 0 < B < math.inf
    x = np.abs(dist.draw(derive_stream(2, 2).generator(), 10**5))
    for t in np.linspace(0.05, 4, 40):
        assert np.mean(x > t) <= 2 * math.exp(-t * t / B / B) + 0.01


def test_real_ensemble_has_zero_imaginary_part():
    A = sample_matrix(MatrixEnsemble("real", 6, 4, "symmetric-uniform"), derive_stream(1, 1))
    assert not np.any(A.imag)
    assert np.all(np.abs(A.real) <= math.sqrt(3))


@pytest.mark.parametrize("rows,cols", [(0, 3), (3, 0)])
def test_zero_dimensions_rejected(rows, cols):
    with pytest.raises(ValueError):
        MatrixEnsemble("complex", rows, cols)


def test_unknown_distribution_rejected():
    with pytest.raises(ValueError):
        EntryDistribution("cauchy")


def test_unit_sphere_scalar():
    v = sample_unit_sphere(1, "complex", derive_stream(4, 0))
    assert abs(abs(v[0]) - 1) < 1e-15


def test_unit_sphere_norm():
    v = sample_unit_sphere(1000, "complex", derive_stream(4, 1))
    assert abs(np.linalg.norm(v) - 1) < 1e-14


def test_unit_sphere_zero_dimension_rejected():
    with pytest.raises(ValueError):
        sample_unit_sphere(0, "real", derive_stream(0, 0))


def test_unit_sphere_first_coordinate_uniform_in_c2():
    rng = derive_stream(8, 0).generator()
    s = np.array([abs(sample_unit_sphere(2, "complex", rng)[0]) ** 2 for _ in range(10**5)])
    assert stats.kstest(s, "uniform").statistic < 0.02


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), idx=st.integers(0, 2**64 - 1),
       rows=st.integers(1, 5), cols=st.integers(1, 5), field=st.sampled_from(["real", "complex"]))
def test_sampling_is_pure(seed, idx, rows, cols, field):
    ens = MatrixEnsemble(field, rows, cols)
    A = sample_matrix(ens, derive_stream(seed, idx))
    B = sample_matrix(ens, derive_stream(seed, idx))
    assert A.tobytes() == B.tobytes()
    if field == "real":
        assert not np.any(A.imag)
