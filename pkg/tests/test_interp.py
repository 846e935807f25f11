import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wavemesh import errors
from wavemesh.interp import (InterpolationMatrix, apply, apply_transpose, build_linear_interp,
                             max_eigenvalue_rtr, rtr_eigenvalues)

from oracles import dense_interp

unit = st.floats(0.0, 1.0, allow_nan=False)
dyadic = st.sampled_from([2, 4, 8, 16, 32, 64])


def test_single_rows():
    assert build_linear_interp([0.3], 4).rows[0] == [(1, pytest.approx(0.8)), (2, pytest.approx(0.2))]
    assert build_linear_interp([0.1], 4).rows[0] == [(1, 1.0)]
    assert build_linear_interp([0.5], 4).rows[0] == [(2, 1.0)]
    assert build_linear_interp([0.25], 4).rows[0] == [(1, 1.0)]
    assert build_linear_interp([1.0], 4).rows[0] == [(4, 1.0)]


def test_apply_examples():
    R = build_linear_interp([0.3], 4)
    np.testing.assert_allclose(apply(R, [1.0, 2, 3, 4]), [1.2], atol=1e-15)
    np.testing.assert_allclose(apply_transpose(R, [1.0]), [0.8, 0.2, 0, 0], atol=1e-15)
    np.testing.assert_array_equal(apply_transpose(R, [0.0]), np.zeros(4))


def test_identity_layout():
    K = 16
    R = build_linear_interp(np.arange(1, K + 1) / K, K)
    np.testing.assert_array_equal(R.toarray(), np.eye(K))
    f = np.random.default_rng(1).standard_normal(K)
    np.testing.assert_array_equal(R.apply(f), f)
    assert max_eigenvalue_rtr(R) == pytest.approx(1.0, rel=1e-10)


@given(arrays(np.float64, st.integers(1, 40), elements=unit), dyadic)
def test_matches_formula_and_row_invariants(x, K):
    R = InterpolationMatrix(x, K)
    dense = R.toarray()
    np.testing.assert_allclose(dense, dense_interp(x, K), atol=1e-14)
    nnz = (dense != 0).sum(axis=1)
    assert ((nnz >= 1) & (nnz <= 2)).all()
    assert (R.nnz_per_row >= 1).all() and (R.nnz_per_row <= 2).all()
    assert ((dense >= 0) & (dense <= 1)).all()
    np.testing.assert_allclose(dense.sum(axis=1), 1.0, atol=1e-15)
    low = x <= 1.0 / K
    assert (dense[low, 0] == 1.0).all()


@given(arrays(np.float64, st.integers(1, 40), elements=unit), dyadic)
def test_ones_reproduced(x, K):
    np.testing.assert_allclose(InterpolationMatrix(x, K).apply(np.ones(K)), 1.0, atol=1e-15)


def test_adjoint_identity_random_pairs(rng):
    R = InterpolationMatrix(rng.uniform(size=20), 8)
    for _ in range(100):
        f, r = rng.standard_normal(8), rng.standard_normal(20)
        assert abs(R.apply(f) @ r - f @ R.apply_transpose(r)) < 1e-12


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0.0, 1.0)), dyadic,
       st.floats(-5, 5), st.floats(-5, 5))
def test_affine_exactness(x, K, a, b):
    mesh = np.arange(1, K + 1) / K
    R = InterpolationMatrix(x, K)
    inside = x >= 1.0 / K
    got = R.apply(a + b * mesh)[inside]
    np.testing.assert_allclose(got, a + b * x[inside], atol=1e-12)


def test_batched_apply_matches_single(rng):
    R = InterpolationMatrix(rng.uniform(size=30), 16)
    F = rng.standard_normal((3, 16))
    np.testing.assert_allclose(R.apply(F), np.stack([R.apply(f) for f in F]), atol=1e-15)


def test_rtr_is_tridiagonal(rng):
    for K in (4, 16, 64):
        R = InterpolationMatrix(rng.uniform(size=3 * K), K)
        A = R.toarray()
        G = A.T @ A
        i, j = np.indices(G.shape)
        assert (G[np.abs(i - j) > 1] == 0).all()
        diag, off = R.rtr_bands()
        np.testing.assert_allclose(np.diag(G), diag, atol=1e-12)
        np.testing.assert_allclose(np.diag(G, 1), off, atol=1e-12)


def test_rank_one_eigenvalue():
    R = build_linear_interp(np.full(10, 0.3), 4)
    assert max_eigenvalue_rtr(R) == pytest.approx(6.8, rel=1e-10)


def test_eigenvalue_matches_dense_solver(rng):
    R = InterpolationMatrix(rng.uniform(size=50), 16)
    A = R.toarray()
    top = np.linalg.eigvalsh(A.T @ A)[-1]
    assert max_eigenvalue_rtr(R) == pytest.approx(top, rel=1e-8)
    assert rtr_eigenvalues(R)[-1] == pytest.approx(top, rel=1e-10)


@given(arrays(np.float64, st.integers(2, 60), elements=unit), dyadic,
       st.integers(0, 2 ** 31))
def test_rayleigh_lower_bound(x, K, seed):
    R = InterpolationMatrix(x, K)
    lam = max_eigenvalue_rtr(R)
    assert lam > 0
    v = np.random.default_rng(seed).standard_normal(K)
    Rv = R.apply(v)
    assert lam >= (Rv @ Rv) / (v @ v) * (1 - 1e-9)


def test_duplicates_repeat_rows():
    R = InterpolationMatrix([0.4, 0.4, 0.4], 8)
    A = R.toarray()
    assert (A[0] == A[1]).all() and (A[1] == A[2]).all()


def test_errors():
    with pytest.raises(errors.OutOfDomain):
        InterpolationMatrix([1.2], 4)
    with pytest.raises(errors.OutOfDomain):
        InterpolationMatrix([np.nan], 4)
    with pytest.raises(errors.NonDyadicK):
        InterpolationMatrix([0.5], 6)
    R = InterpolationMatrix([0.5, 0.2], 4)
    with pytest.raises(errors.DimensionMismatch):
        R.apply(np.ones(3))
    with pytest.raises(errors.DimensionMismatch):
        R.apply_transpose(np.ones(3))
    with pytest.raises(errors.EmptyMatrix):
        max_eigenvalue_rtr(InterpolationMatrix(np.empty(0), 4))
