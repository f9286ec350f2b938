from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from andersonkit.linalg.sparse import SparseMatrix


def write_mtx(path: Path, dense: np.ndarray, symmetry: str = "general") -> Path:
    """Matrix Market coordinate file with every nonzero of `dense` (lower triangle if symmetric)."""
    rows, cols = np.nonzero(dense)
    if symmetry != "general":
        keep = rows >= cols
        rows, cols = rows[keep], cols[keep]
    lines = [f"%%MatrixMarket matrix coordinate real {symmetry}", f"{dense.shape[0]} {dense.shape[1]} {rows.size}"]
    lines += [f"{i + 1} {j + 1} {float(dense[i, j])!r}" for i, j in zip(rows, cols)]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def random_sparse(n: int, density: float, seed: int, diag_shift: float = 0.0) -> SparseMatrix:
    rng = np.random.default_rng(seed)
    M = sp.random(n, n, density=density, random_state=rng, format="csr")
    M = M + diag_shift * sp.identity(n, format="csr")
    return SparseMatrix.from_scipy(M)


def spd_matrix(n: int, seed: int, spread: float = 10.0) -> np.ndarray:
    """SPD matrix with eigenvalues in [1, spread]."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(np.linspace(1.0, spread, n)) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tridiagonal():
    n = 30
    dense = 4.0 * np.eye(n) - np.eye(n, k=1) - 1.5 * np.eye(n, k=-1)
    return SparseMatrix.from_dense(dense), dense
