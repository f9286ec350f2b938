from __future__ import annotations

import logging
from collections import deque

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..errors import DimensionMismatchError
from ..linalg.sparse import SparseMatrix


log = logging.getLogger(__name__)


def _symmetric_pattern(A: SparseMatrix) -> sp.csr_matrix:
    if not A.is_square():
        raise DimensionMismatchError(f"square matrix required, got {A.n_rows}x{A.n_cols}")
    pattern = sp.csr_matrix((np.ones(A.nnz), A.col_indices, A.row_offsets), shape=A.shape)
    sym = (pattern + pattern.T).tocsr()
    sym.setdiag(0)
    sym.eliminate_zeros()
    sym.sort_indices()
    return sym


def _bfs_levels(indptr: np.ndarray, indices: np.ndarray, start: int, level: np.ndarray) -> list[int]:
    """Breadth-first search from `start`; fills `level` and returns the visit order."""
    level[start] = 0
    order = [start]
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in indices[indptr[u]:indptr[u + 1]]:
            if level[v] < 0:
                level[v] = level[u] + 1
                order.append(int(v))
                queue.append(v)
    return order


def _pseudo_peripheral(indptr: np.ndarray, indices: np.ndarray, degree: np.ndarray, start: int, n: int) -> int:
    # double-BFS: jump to a minimum-degree vertex of the last level until eccentricity stops growing
    current = start
    eccentricity = -1
    while True:
        level = np.full(n, -1, dtype=np.int64)
        order = _bfs_levels(indptr, indices, current, level)
        depth = int(level[order[-1]])
        if depth <= eccentricity:
            return current
        eccentricity = depth
        last = [v for v in order if level[v] == depth]
        candidate = min(last, key=lambda v: (degree[v], v))
        if candidate == current:
            return current
        current = candidate


def rcm_ordering(A: SparseMatrix) -> np.ndarray:
    """Reverse Cuthill-McKee permutation of the pattern of A + A^T.

    perm[i] is the original index placed at position i. Each connected
    component is ordered from a pseudo-peripheral vertex, visiting neighbours
    by increasing degree.
    """
    sym = _symmetric_pattern(A)
    n = sym.shape[0]
    indptr, indices = sym.indptr, sym.indices
    degree = np.diff(indptr)
    n_comp, labels = connected_components(sym, directed=False)

    visited = np.zeros(n, dtype=bool)
    order: list[int] = []
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        seed = int(members[np.argmin(degree[members])])
        root = _pseudo_peripheral(indptr, indices, degree, seed, n)
        visited[root] = True
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(int(u))
            nbrs = [int(v) for v in indices[indptr[u]:indptr[u + 1]] if not visited[v]]
            nbrs.sort(key=lambda v: (degree[v], v))
            for v in nbrs:
                visited[v] = True
                queue.append(v)
    perm = np.asarray(order[::-1], dtype=np.int64)
    log.debug("RCM on n=%d: %d component(s), bandwidth %d -> %d", n, n_comp, bandwidth(A), bandwidth(A, perm))
    return perm


def bandwidth(A: SparseMatrix, perm: np.ndarray | None = None) -> int:
    """max |i - j| over stored entries of A[perm][:, perm]."""
    if A.nnz == 0:
        return 0
    rows = np.repeat(np.arange(A.n_rows), np.diff(A.row_offsets))
    cols = A.col_indices
    if perm is not None:
        position = np.empty_like(perm)
        position[perm] = np.arange(perm.size)
        rows, cols = position[rows], position[cols]
    return int(np.max(np.abs(rows - cols)))


def permute_symmetric(A: SparseMatrix, perm: np.ndarray) -> SparseMatrix:
    """A[perm][:, perm]."""
    return SparseMatrix.from_scipy(A.csr[perm][:, perm])


def diagonal_scaling(A: SparseMatrix) -> tuple[np.ndarray, SparseMatrix]:
    """Return (D, D^-1 A) with D = diag(A); zero diagonal entries become 1."""
    if not A.is_square():
        raise DimensionMismatchError(f"square matrix required, got {A.n_rows}x{A.n_cols}")
    d = A.diagonal().astype(np.float64)
    d[d == 0.0] = 1.0
    scaled = sp.diags(1.0 / d) @ A.csr
    return d, SparseMatrix.from_scipy(scaled)
