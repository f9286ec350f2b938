from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from ..constants import PreconditionerKind
from ..errors import DimensionMismatchError, ZeroPivotError
from ..linalg.sparse import SparseMatrix
from .ordering import diagonal_scaling, permute_symmetric, rcm_ordering


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Preconditioner:
    """Incomplete factors with the reorderings and scaling they were built under.

    With D = diag(row_scaling), p_r = row_permutation and p_c = col_permutation
    the factors satisfy  (D^-1 A)[p_r][:, p_c] ~= lower @ upper.
    """

    lower: SparseMatrix
    upper: SparseMatrix
    row_permutation: Optional[np.ndarray] = None
    col_permutation: Optional[np.ndarray] = None
    row_scaling: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.lower.n_rows


def _require_square(A: SparseMatrix) -> None:
    if not A.is_square():
        raise DimensionMismatchError(f"square matrix required, got {A.n_rows}x{A.n_cols}")


def _split_factors(combined: sp.csr_matrix) -> tuple[SparseMatrix, SparseMatrix]:
    n = combined.shape[0]
    lower = sp.tril(combined, k=-1, format="csr") + sp.identity(n, format="csr")
    upper = sp.triu(combined, k=0, format="csr")
    return SparseMatrix.from_scipy(lower), SparseMatrix.from_scipy(upper)


def ilu0(A: SparseMatrix) -> Preconditioner:
    """Zero fill-in incomplete LU (IKJ elimination restricted to the pattern of A)."""
    _require_square(A)
    n = A.n_rows
    indptr, indices = A.row_offsets, A.col_indices
    data = A.values.copy()

    diag_pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        pos = s + int(np.searchsorted(indices[s:e], i))
        if pos == e or indices[pos] != i:
            raise ZeroPivotError("missing structural diagonal", row=i)
        diag_pos[i] = pos

    # work[j] = storage position of column j in the current row, -1 outside the pattern
    work = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        work[indices[s:e]] = np.arange(s, e)
        for p in range(s, diag_pos[i]):
            k = indices[p]
            data[p] /= data[diag_pos[k]]
            us, ue = diag_pos[k] + 1, indptr[k + 1]
            if us == ue:
                continue
            targets = work[indices[us:ue]]
            hit = targets >= 0
            data[targets[hit]] -= data[p] * data[us:ue][hit]
        work[indices[s:e]] = -1
        if data[diag_pos[i]] == 0.0:
            raise ZeroPivotError("zero pivot", row=i)

    combined = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    lower, upper = _split_factors(combined)
    return Preconditioner(lower=lower, upper=upper)


def _ilutp_rows(B: SparseMatrix, tau: float):
    """Row-wise threshold ILU of B with column pivoting: B[:, perm] ~= L U.

    Returns (L rows, U diagonal, U off-diagonal rows in original column
    numbering, perm, iperm). Entries below tau * ||row_i||_2 are dropped; the
    largest remaining U-part entry becomes the pivot.
    """
    n = B.n_rows
    indptr, indices, data = B.row_offsets, B.col_indices, B.values
    perm = np.arange(n)
    iperm = np.arange(n)
    u_diag = np.empty(n)
    l_rows: list[tuple[list[int], list[float]]] = []
    u_rows: list[tuple[np.ndarray, np.ndarray]] = []

    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        tau_i = tau * float(np.linalg.norm(data[s:e]))
        w = {int(iperm[c]): float(v) for c, v in zip(indices[s:e], data[s:e])}
        heap = [j for j in w if j < i]
        heapq.heapify(heap)
        lower_pos: list[int] = []
        lower_val: list[float] = []
        while heap:
            k = heapq.heappop(heap)
            wk = w.pop(k) / u_diag[k]
            if abs(wk) < tau_i:
                continue
            lower_pos.append(k)
            lower_val.append(wk)
            ucols, uvals = u_rows[k]
            for j, ukj in zip(iperm[ucols].tolist(), uvals.tolist()):
                if j in w:
                    w[j] -= wk * ukj
                else:
                    w[j] = -wk * ukj
                    if j < i:
                        heapq.heappush(heap, j)

        keep = {j: v for j, v in w.items() if j == i or abs(v) >= tau_i}
        if keep:
            jmax = max(keep, key=lambda j: (abs(keep[j]), -j))
            if jmax != i and abs(keep[jmax]) > abs(keep.get(i, 0.0)):
                ci, cj = perm[i], perm[jmax]
                perm[i], perm[jmax] = cj, ci
                iperm[ci], iperm[cj] = jmax, i
                vi = keep.pop(i, None)
                keep[i] = keep.pop(jmax)
                if vi is not None:
                    keep[jmax] = vi
        d = keep.pop(i, 0.0)
        if d == 0.0:
            if tau_i == 0.0:
                raise ZeroPivotError("structurally singular: all candidate pivots are zero", row=i)
            # zero pivot replaced by the local tolerance
            d = tau_i
        u_diag[i] = d
        positions = np.fromiter(keep.keys(), dtype=np.int64, count=len(keep))
        u_rows.append((perm[positions].copy(), np.fromiter(keep.values(), dtype=np.float64, count=len(keep))))
        l_rows.append((lower_pos, lower_val))
    return l_rows, u_diag, u_rows, perm, iperm


def _rows_to_csr(n: int, rows_pos, rows_val) -> sp.csr_matrix:
    counts = [len(p) for p in rows_pos]
    r = np.repeat(np.arange(n), counts)
    c = np.concatenate([np.asarray(p, dtype=np.int64) for p in rows_pos]) if n else np.empty(0, dtype=np.int64)
    v = np.concatenate([np.asarray(x, dtype=np.float64) for x in rows_val]) if n else np.empty(0)
    return sp.csr_matrix((v, (r, c)), shape=(n, n))


def ilut(A: SparseMatrix, tau: float = 1e-4) -> Preconditioner:
    """Threshold incomplete LU with partial pivoting, A[perm] ~= L U.

    The threshold sweep runs row by row over A^T with column pivoting, which
    picks the maximum-magnitude entry in each column of A as pivot. Entries
    smaller than tau times the 2-norm of the working row are dropped and a
    zero pivot is replaced by that local tolerance. tau = 0 keeps every entry
    and reproduces dense LU with partial pivoting.
    """
    _require_square(A)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    n = A.n_rows
    l_rows, u_diag, u_rows, perm, iperm = _ilutp_rows(A.transpose(), tau)

    l_b = _rows_to_csr(n, [p for p, _ in l_rows], [v for _, v in l_rows]) + sp.identity(n, format="csr")
    u_pos = [np.concatenate([[i], iperm[cols]]) for i, (cols, _) in enumerate(u_rows)]
    u_val = [np.concatenate([[u_diag[i]], vals]) for i, (_, vals) in enumerate(u_rows)]
    u_b = _rows_to_csr(n, u_pos, u_val)

    # transpose back: A[perm] ~= (U_B^T D^-1) (D L_B^T)
    scale = sp.diags(u_diag)
    lower = (u_b.T @ sp.diags(1.0 / u_diag)).tocsr()
    upper = (scale @ l_b.T).tocsr()
    log.debug("ILUT(tau=%g) n=%d: nnz(L)=%d nnz(U)=%d", tau, n, lower.nnz, upper.nnz)
    return Preconditioner(
        lower=SparseMatrix.from_scipy(lower),
        upper=SparseMatrix.from_scipy(upper),
        row_permutation=perm.astype(np.int64),
    )


def identity_preconditioner(n: int) -> Preconditioner:
    eye = SparseMatrix.identity(n)
    return Preconditioner(lower=eye, upper=eye)


def apply(P: Preconditioner, v) -> np.ndarray:
    """M^-1 v: scale, permute rows, solve L y = c and U u = y, scatter back."""
    c = np.asarray(v, dtype=np.float64)
    if c.ndim != 1 or c.size != P.n:
        raise DimensionMismatchError(f"vector has length {c.size}, expected {P.n}")
    if P.row_scaling is not None:
        c = c / P.row_scaling
    if P.row_permutation is not None:
        c = c[P.row_permutation]
    y = spsolve_triangular(P.lower.csr, c, lower=True, unit_diagonal=True)
    u = spsolve_triangular(P.upper.csr, y, lower=False)
    if P.col_permutation is None:
        return u
    out = np.empty_like(u)
    out[P.col_permutation] = u
    return out


def build_preconditioner(
    A: SparseMatrix,
    kind: PreconditionerKind | str,
    tau: float = 1e-4,
    rcm: bool = False,
    diagscale: bool = False,
) -> Optional[Preconditioner]:
    """Scale, reorder and factor A; the result approximates A itself.

    Returns None for kind "none". Factorization errors propagate.
    """
    kind = PreconditionerKind(kind)
    if kind is PreconditionerKind.NONE:
        return None
    work = A
    scaling = None
    order = None
    if diagscale:
        scaling, work = diagonal_scaling(work)
    if rcm:
        order = rcm_ordering(work)
        work = permute_symmetric(work, order)
    factors = ilu0(work) if kind is PreconditionerKind.ILU0 else ilut(work, tau)

    pivot = factors.row_permutation
    if order is not None and pivot is not None:
        rows = order[pivot]
    else:
        rows = order if pivot is None else pivot
    return replace(factors, row_permutation=rows, col_permutation=order, row_scaling=scaling)
