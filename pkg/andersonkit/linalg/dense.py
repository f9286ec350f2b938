from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ..constants import RANK_TOL
from ..errors import DimensionMismatchError


@dataclass(frozen=True)
class QrFactors:
    """M[:, column_permutation] = q @ t with |t[i, i]| non-increasing."""

    q: np.ndarray
    t: np.ndarray
    column_permutation: np.ndarray


def _pivoted_qr(M: np.ndarray) -> QrFactors:
    # LAPACK geqp3: Householder reflections, pivot = largest remaining column norm
    q, t, perm = sla.qr(M, mode="economic", pivoting=True, check_finite=False)
    return QrFactors(q=q, t=t, column_permutation=perm)


def _as_matrix(M) -> np.ndarray:
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("expected a non-empty 2-D matrix")
    return A


def qr_column_pivoting(M) -> QrFactors:
    A = _as_matrix(M)
    if A.shape[0] < A.shape[1]:
        raise DimensionMismatchError(f"tall matrix required, got {A.shape[0]}x{A.shape[1]}")
    return _pivoted_qr(A)


def least_squares_solve(M, rhs, rank_tol: float = RANK_TOL) -> np.ndarray:
    """argmin ||M g - rhs||_2 via pivoted QR.

    Pivots with |t[i, i]| < rank_tol * |t[0, 0]| are treated as dependent and
    their components set to zero. Wide matrices (fewer rows than columns, as
    produced by aggressive row selection) are handled the same way.
    """
    A = _as_matrix(M)
    b = np.asarray(rhs, dtype=np.float64)
    if b.ndim != 1 or b.size != A.shape[0]:
        raise DimensionMismatchError(f"rhs has length {b.size}, expected {A.shape[0]}")
    factors = _pivoted_qr(A)
    diag = np.abs(np.diag(factors.t))
    g = np.zeros(A.shape[1])
    if diag.size == 0 or diag[0] == 0.0:
        return g
    rank = int(np.count_nonzero(diag >= rank_tol * diag[0]))
    y = sla.solve_triangular(factors.t[:rank, :rank], factors.q[:, :rank].T @ b, lower=False, check_finite=False)
    g[factors.column_permutation[:rank]] = y
    return g


def min_singular_upper_triangular(t) -> float:
    T = np.triu(np.asarray(t, dtype=np.float64))
    if T.size == 0:
        return 0.0
    return float(sla.svdvals(T, check_finite=False).min())
