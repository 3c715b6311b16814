import numpy as np
import pytest
from hypothesis import given, strategies as st

from swedarcy.linalg import (
    BlockSparseMatrix,
    Factorization,
    SolverError,
    bmat,
    finalize,
    kron_block_sum,
    solve,
    spmv,
)


def test_finalize_sums_duplicates():
    A = finalize([0, 0], [0, 0], [1.0, 2.0], (2, 2))
    assert len(A.rows) == 1
    assert A.toarray()[0, 0] == 3.0


def test_finalize_empty_is_zero():
    A = finalize([], [], [], (4, 4))
    np.testing.assert_array_equal(A.toarray(), np.zeros((4, 4)))
    np.testing.assert_array_equal(A @ np.ones(4), np.zeros(4))


def test_finalize_rejects_out_of_range():
    with pytest.raises((ValueError, IndexError)):
        finalize([2], [0], [1.0], (2, 2))


def test_single_entry_matvec():
    A = finalize([1], [0], [5.0], (2, 2))
    a, b = 1.7, -0.3
    np.testing.assert_array_equal(A @ np.array([a, b]), [0.0, 5 * a])


def test_kron_block_sum_identity_blocks():
    A = kron_block_sum([[2.0, 3.0]], [np.eye(2)])
    np.testing.assert_array_equal(A.toarray(), np.diag([2.0, 2.0, 3.0, 3.0]))


def test_kron_block_sum_zero_second_part():
    M1 = np.array([[1.0, 0.5], [0.5, 2.0]])
    M2 = np.array([[3.0, 1.0], [1.0, 4.0]])
    np.testing.assert_array_equal(kron_block_sum([[1.0], [0.0]], [M1, M2]).toarray(), M1)


def test_kron_block_sum_shape_mismatch():
    with pytest.raises(ValueError):
        kron_block_sum([[1.0, 2.0], [1.0]], [np.eye(2), np.eye(2)])
    with pytest.raises(ValueError):
        kron_block_sum([[1.0]], [np.eye(2), np.eye(2)])


def test_solve_identity():
    b = np.array([3.0, -1.0, 2.5])
    np.testing.assert_allclose(solve(finalize(range(3), range(3), np.ones(3), (3, 3)), b), b)


def test_solve_diagonal():
    A = finalize([0, 1], [0, 1], [2.0, 4.0], (2, 2))
    np.testing.assert_allclose(solve(A, [2.0, 8.0]), [1.0, 2.0])


def test_solve_random_spd(rng):
    B = rng.standard_normal((50, 50))
    A = B @ B.T + 50 * np.eye(50)
    x_star = rng.standard_normal(50)
    rows, cols = np.nonzero(A)
    x = solve(finalize(rows, cols, A[rows, cols], A.shape), A @ x_star)
    np.testing.assert_allclose(x, x_star, atol=1e-8)


def test_singular_matrix_reports_failure():
    A = finalize([0, 0, 1, 1], [0, 1, 0, 1], [1.0, 1.0, 1.0, 1.0], (2, 2))
    with pytest.raises(SolverError):
        solve(A, [1.0, 0.0])


def test_factorization_reuse():
    A = finalize([0, 1, 1], [0, 0, 1], [2.0, 1.0, 3.0], (2, 2))
    lu = Factorization(A)
    for b in ([1.0, 0.0], [0.0, 1.0]):
        np.testing.assert_allclose(A.toarray() @ lu.solve(b), b, atol=1e-14)


def test_bmat_places_blocks():
    A = BlockSparseMatrix.block_diagonal(np.array([[[1.0, 2.0], [3.0, 4.0]]]))
    C = bmat([[A, None], [None, 2 * A]])
    dense = C.toarray()
    np.testing.assert_array_equal(dense[:2, :2], A.toarray())
    np.testing.assert_array_equal(dense[2:, 2:], 2 * A.toarray())
    np.testing.assert_array_equal(dense[:2, 2:], 0.0)


@st.composite
def block_matrices(draw):
    n_rows = draw(st.integers(1, 4))
    n_cols = draw(st.integers(1, 4))
    br = draw(st.integers(1, 3))
    bc = draw(st.integers(1, 3))
    count = draw(st.integers(0, 8))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, n_rows, count)
    cols = rng.integers(0, n_cols, count)
    blocks = rng.standard_normal((count, br, bc))
    return BlockSparseMatrix((n_rows * br, n_cols * bc), (br, bc), rows, cols, blocks), rng


@given(block_matrices())
def test_spmv_matches_dense_expansion(data):
    A, rng = data
    x = rng.standard_normal(A.shape[1])
    np.testing.assert_allclose(spmv(A, x), A.toarray() @ x, atol=1e-12)


@given(block_matrices(), st.floats(-3, 3))
def test_compress_and_combine_preserve_values(data, c):
    A, _ = data
    np.testing.assert_allclose(A.compress().toarray(), A.toarray(), atol=1e-12)
    np.testing.assert_allclose(
        BlockSparseMatrix.combine([(1.0, A), (c, A)]).toarray(), (1 + c) * A.toarray(), atol=1e-12
    )
