from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionMismatchError


@dataclass(frozen=True)
class SparseMatrix:
    """Real CSR matrix in double precision.

    Rows are stored with strictly increasing column indices and no duplicate
    entries. Instances are immutable and safe to share between threads.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        offsets = self.row_offsets
        if offsets.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if offsets[0] != 0 or offsets[-1] != self.col_indices.size or np.any(np.diff(offsets) < 0):
            raise ValueError("row_offsets must be non-decreasing from 0 to nnz")
        if self.col_indices.size != self.values.size:
            raise ValueError("col_indices and values differ in length")
        if self.col_indices.size:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing inside each row: a non-positive step is only allowed at a row start
            steps = np.diff(self.col_indices)
            row_starts = np.zeros(self.col_indices.size, dtype=bool)
            row_starts[offsets[1:-1][offsets[1:-1] < self.col_indices.size]] = True
            if np.any((steps <= 0) & ~row_starts[1:]):
                raise ValueError("column indices must be strictly increasing within a row")

    # -- construction ---------------------------------------------------

    @classmethod
    def from_scipy(cls, matrix: sp.spmatrix) -> "SparseMatrix":
        csr = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(
            n_rows=int(csr.shape[0]),
            n_cols=int(csr.shape[1]),
            row_offsets=csr.indptr.astype(np.int64),
            col_indices=csr.indices.astype(np.int64),
            values=csr.data.astype(np.float64),
        )

    @classmethod
    def from_coo(cls, n_rows: int, n_cols: int, rows, cols, vals) -> "SparseMatrix":
        """Build from triplets; duplicate (i, j) pairs are summed."""
        coo = sp.coo_matrix(
            (np.asarray(vals, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(n_rows, n_cols),
        )
        return cls.from_scipy(coo.tocsr())

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(dense, dtype=np.float64)))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls.from_scipy(sp.identity(n, format="csr"))

    @classmethod
    def diag(cls, entries) -> "SparseMatrix":
        return cls.from_scipy(sp.diags(np.asarray(entries, dtype=np.float64), format="csr"))

    # -- views ----------------------------------------------------------

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=(self.n_rows, self.n_cols))

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def to_scipy(self) -> sp.csr_matrix:
        return self.csr.copy()

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.csr.T)

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def is_square(self) -> bool:
        return self.n_rows == self.n_cols


def _as_vector(x, length: int, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size != length:
        raise DimensionMismatchError(f"{what} has length {v.size if v.ndim == 1 else v.shape}, expected {length}")
    return v


def matvec(A: SparseMatrix, x) -> np.ndarray:
    """A @ x in double precision, rows accumulated in storage order."""
    v = _as_vector(x, A.n_cols, "x")
    return A.csr @ v


def residual(A: SparseMatrix, b, x) -> np.ndarray:
    """b - A @ x."""
    rhs = _as_vector(b, A.n_rows, "b")
    return rhs - matvec(A, x)


def estimate_two_norm(A: SparseMatrix, power_iters: int = 50, seed: int = 0) -> float:
    """Estimate ||A||_2 by power iteration on A^T A from a seeded random start.

    The Rayleigh quotient of a positive semidefinite operator never decreases
    along power iterations, so more iterations never lower the estimate.
    """
    if power_iters < 1:
        raise ValueError("power_iters must be >= 1")
    if A.nnz == 0 or not np.any(A.values):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.n_cols)
    v /= np.linalg.norm(v)
    csr = A.csr
    csr_t = csr.T.tocsr()
    estimate = 0.0
    for _ in range(power_iters):
        w = csr_t @ (csr @ v)
        estimate = max(estimate, float(v @ w) / float(v @ v))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            break
        v = w / norm_w
    return float(np.sqrt(estimate))
