"""Block-sparse matrices and the linear-solve contract shared by both solvers."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """A linear solve failed or violated the residual contract."""


class BlockSparseMatrix:
    """Sparse matrix stored as dense blocks placed at block coordinates.

    Duplicate block coordinates are summed by :meth:`compress`.  Matrix-vector
    products work directly on the blocks; :meth:`tocsr` produces the compressed
    row form for factorisations.
    """

    __slots__ = ("shape", "block_shape", "rows", "cols", "blocks", "_csr")

    def __init__(self, shape, block_shape, rows, cols, blocks):
        self.shape = (int(shape[0]), int(shape[1]))
        self.block_shape = (int(block_shape[0]), int(block_shape[1]))
        br, bc = self.block_shape
        if self.shape[0] % br or self.shape[1] % bc:
            raise ValueError(f"shape {self.shape} not divisible by block shape {self.block_shape}")
        self.rows = np.asarray(rows, dtype=np.int64).ravel()
        self.cols = np.asarray(cols, dtype=np.int64).ravel()
        blocks = np.asarray(blocks, dtype=float)
        self.blocks = blocks.reshape(len(self.rows), br, bc)
        if len(self.rows) != len(self.cols):
            raise ValueError("row and column index arrays differ in length")
        nr, nc = self.n_block_rows, self.n_block_cols
        if len(self.rows) and (
            self.rows.min() < 0 or self.rows.max() >= nr or self.cols.min() < 0 or self.cols.max() >= nc
        ):
            raise IndexError("block index out of range")
        self._csr = None

    @classmethod
    def _trusted(cls, shape, block_shape, rows, cols, blocks):
        """Construct from already validated int64 index arrays and (S, br, bc) blocks."""
        self = object.__new__(cls)
        self.shape, self.block_shape = shape, block_shape
        self.rows, self.cols, self.blocks = rows, cols, blocks
        self._csr = None
        return self

    @property
    def n_block_rows(self) -> int:
        return self.shape[0] // self.block_shape[0]

    @property
    def n_block_cols(self) -> int:
        return self.shape[1] // self.block_shape[1]

    @classmethod
    def zeros(cls, shape, block_shape):
        br, bc = block_shape
        return cls(shape, block_shape, [], [], np.zeros((0, br, bc)))

    @classmethod
    def block_diagonal(cls, blocks):
        blocks = np.asarray(blocks, dtype=float)
        K, br, bc = blocks.shape
        idx = np.arange(K)
        return cls((K * br, K * bc), (br, bc), idx, idx, blocks)

    def compress(self) -> "BlockSparseMatrix":
        """Sum duplicate block coordinates; blocks sorted by (row, col)."""
        if len(self.rows) == 0:
            return self
        key = self.rows * self.n_block_cols + self.cols
        if np.all(np.diff(key) > 0):
            return self
        order = np.argsort(key, kind="stable")
        key = key[order]
        starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
        blocks = np.add.reduceat(self.blocks[order], starts, axis=0)
        uniq = key[starts]
        return BlockSparseMatrix(
            self.shape, self.block_shape, uniq // self.n_block_cols, uniq % self.n_block_cols, blocks
        )

    @classmethod
    def combine(cls, terms) -> "BlockSparseMatrix":
        """Linear combination Σ c·A from (c, A) pairs with a single concatenation."""
        terms = list(terms)
        if not terms:
            raise ValueError("combine needs at least one term")
        first = terms[0][1]
        for _, A in terms[1:]:
            first._check_compatible(A)
        terms = [(c, A) for c, A in terms if len(A.rows)]
        if not terms:
            return cls.zeros(first.shape, first.block_shape)
        blocks = np.concatenate([A.blocks if c == 1 else c * A.blocks for c, A in terms])
        return cls._trusted(
            first.shape,
            first.block_shape,
            np.concatenate([A.rows for _, A in terms]),
            np.concatenate([A.cols for _, A in terms]),
            blocks,
        )

    def _check_compatible(self, other):
        if self.shape != other.shape or self.block_shape != other.block_shape:
            raise ValueError(f"incompatible operands {self.shape}/{self.block_shape} and {other.shape}/{other.block_shape}")

    def __add__(self, other):
        if not isinstance(other, BlockSparseMatrix):
            return NotImplemented
        self._check_compatible(other)
        return BlockSparseMatrix(
            self.shape,
            self.block_shape,
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.cols, other.cols]),
            np.concatenate([self.blocks, other.blocks]),
        )

    def __neg__(self):
        return BlockSparseMatrix._trusted(self.shape, self.block_shape, self.rows, self.cols, -self.blocks)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return BlockSparseMatrix._trusted(self.shape, self.block_shape, self.rows, self.cols, scalar * self.blocks)

    __rmul__ = __mul__

    def __matmul__(self, x):
        return spmv(self, x)

    def tocsr(self) -> sp.csr_matrix:
        if self._csr is None:
            br, bc = self.block_shape
            ii = (self.rows[:, None, None] * br + np.arange(br)[None, :, None]) + np.zeros((1, 1, bc), dtype=np.int64)
            jj = (self.cols[:, None, None] * bc + np.arange(bc)[None, None, :]) + np.zeros((1, br, 1), dtype=np.int64)
            csr = sp.coo_matrix((self.blocks.ravel(), (ii.ravel(), jj.ravel())), shape=self.shape).tocsr()
            csr.sum_duplicates()
            csr.sort_indices()
            self._csr = csr
        return self._csr

    def toarray(self) -> np.ndarray:
        return self.tocsr().toarray()

    def diagonal_blocks(self) -> np.ndarray:
        """Dense (K, br, bc) array of the diagonal blocks (square block layout only)."""
        if self.n_block_rows != self.n_block_cols:
            raise ValueError("diagonal blocks need a square block layout")
        out = np.zeros((self.n_block_rows,) + self.block_shape)
        sel = self.rows == self.cols
        np.add.at(out, self.rows[sel], self.blocks[sel])
        return out

    def __repr__(self):
        return f"BlockSparseMatrix(shape={self.shape}, block_shape={self.block_shape}, nblocks={len(self.rows)})"


def finalize(rows, cols, vals, shape) -> BlockSparseMatrix:
    """Scalar coordinate triplets to a matrix; duplicates are summed."""
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    if not (len(rows) == len(cols) == len(vals)):
        raise ValueError("triplet arrays differ in length")
    return BlockSparseMatrix(shape, (1, 1), rows, cols, vals).compress()


def kron_block_sum(scalars, ref_blocks) -> BlockSparseMatrix:
    """Block-diagonal matrix with k-th block sum_s scalars[s][k] * ref_blocks[s]."""
    scalars = [np.asarray(s, dtype=float).ravel() for s in scalars]
    ref_blocks = [np.asarray(b, dtype=float) for b in ref_blocks]
    if len(scalars) != len(ref_blocks) or not scalars:
        raise ValueError("need one scalar array per reference block")
    K = len(scalars[0])
    shape = ref_blocks[0].shape
    if any(len(s) != K for s in scalars) or any(b.shape != shape for b in ref_blocks):
        raise ValueError("scalar arrays or reference blocks have inconsistent shapes")
    blocks = np.einsum("sk,sij->kij", np.stack(scalars), np.stack(ref_blocks))
    return BlockSparseMatrix.block_diagonal(blocks)


def bmat(grid) -> BlockSparseMatrix:
    """Assemble a matrix from a grid of equally blocked sub-matrices; ``None`` entries are zero."""
    nr = len(grid)
    nc = len(grid[0])
    ref = next(A for row in grid for A in row if A is not None)
    row_blocks = [next(A.n_block_rows for A in row if A is not None) for row in grid]
    col_blocks = [next(grid[i][j].n_block_cols for i in range(nr) if grid[i][j] is not None) for j in range(nc)]
    roff = np.concatenate([[0], np.cumsum(row_blocks)])
    coff = np.concatenate([[0], np.cumsum(col_blocks)])
    rows, cols, blocks = [], [], []
    for i, row in enumerate(grid):
        for j, A in enumerate(row):
            if A is None:
                continue
            if A.block_shape != ref.block_shape:
                raise ValueError("all sub-matrices need the same block shape")
            rows.append(A.rows + roff[i])
            cols.append(A.cols + coff[j])
            blocks.append(A.blocks)
    br, bc = ref.block_shape
    return BlockSparseMatrix(
        (roff[-1] * br, coff[-1] * bc), ref.block_shape, np.concatenate(rows), np.concatenate(cols), np.concatenate(blocks)
    ).compress()


def spmv(A: BlockSparseMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != A.shape[1]:
        raise ValueError(f"vector length {x.shape[0]} does not match matrix with {A.shape[1]} columns")
    br, bc = A.block_shape
    if not len(A.rows):
        return np.zeros(A.shape[0])
    contrib = np.einsum("sij,sj->si", A.blocks, x.reshape(-1, bc)[A.cols])
    idx = (A.rows[:, None] * br + np.arange(br)[None, :]).ravel()
    return np.bincount(idx, weights=contrib.ravel(), minlength=A.shape[0])


def _check_residual(A, x, b):
    res = np.linalg.norm(A @ x - b)
    bound = RESIDUAL_TOL * max(1.0, np.linalg.norm(b))
    if not np.isfinite(res) or res > bound:
        raise SolverError(f"linear solve residual {res:.3e} exceeds {bound:.3e}")


class Factorization:
    """Reusable sparse LU factorisation honouring the residual contract."""

    def __init__(self, A):
        self.A = A.tocsr() if isinstance(A, BlockSparseMatrix) else sp.csr_matrix(A)
        if self.A.shape[0] != self.A.shape[1]:
            raise ValueError("factorisation needs a square matrix")
        try:
            self._lu = spla.splu(self.A.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"factorisation failed: {exc}") from exc

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        x = self._lu.solve(b)
        _check_residual(self.A, x, b)
        return x


def solve(A, b) -> np.ndarray:
    return Factorization(A).solve(b)


def block_solve(blocks, b) -> np.ndarray:
    """Solve a block-diagonal system given its (K, n, n) blocks."""
    K, n, _ = blocks.shape
    return np.linalg.solve(blocks, np.asarray(b, dtype=float).reshape(K, n, 1)).ravel()


class BlockDiagonalInverse:
    """Element-local inverses of a block-diagonal matrix, applied block by block."""

    def __init__(self, blocks):
        self.blocks = np.asarray(blocks, dtype=float)
        self.inv = np.linalg.inv(self.blocks)

    @classmethod
    def of(cls, A: BlockSparseMatrix):
        return cls(A.diagonal_blocks())

    def __matmul__(self, b):
        K, n, _ = self.inv.shape
        return np.einsum("kij,kj->ki", self.inv, np.asarray(b, dtype=float).reshape(K, n)).ravel()
