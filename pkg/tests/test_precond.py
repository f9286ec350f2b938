import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from andersonkit.constants import PreconditionerKind
from andersonkit.errors import DimensionMismatchError, ZeroPivotError
from andersonkit.linalg.sparse import SparseMatrix
from andersonkit.precond import ilu
from andersonkit.precond.ordering import bandwidth, diagonal_scaling, permute_symmetric, rcm_ordering

from .conftest import random_sparse


def _dense(P):
    return P.lower.to_dense(), P.upper.to_dense()


def test_ilu0_tridiagonal_is_exact_lu(tridiagonal):
    A, dense = tridiagonal
    L, U = _dense(ilu.ilu0(A))
    np.testing.assert_allclose(L @ U, dense, atol=1e-12)
    np.testing.assert_allclose(np.diag(L), 1.0)
    assert np.allclose(L, np.tril(L)) and np.allclose(U, np.triu(U))


def test_ilu0_keeps_pattern(rng):
    A = random_sparse(40, 0.08, seed=7, diag_shift=5.0)
    P = ilu.ilu0(A)
    L, U = _dense(P)
    pattern = A.to_dense() != 0
    combined = np.tril(L, -1) + U
    assert not np.any((combined != 0) & ~pattern)
    # exact on the pattern of A
    np.testing.assert_allclose((L @ U)[pattern], A.to_dense()[pattern], atol=1e-10)


def test_ilu0_missing_diagonal():
    A = SparseMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ZeroPivotError) as exc:
        ilu.ilu0(A)
    assert exc.value.row == 0


def test_ilu0_rejects_rectangular():
    with pytest.raises(DimensionMismatchError):
        ilu.ilu0(SparseMatrix.from_dense(np.ones((2, 3))))


def test_ilut_tau_zero_matches_dense_lu(rng):
    dense = rng.standard_normal((12, 12))
    P = ilu.ilut(SparseMatrix.from_dense(dense), tau=0.0)
    L, U = _dense(P)
    Pm, L_ref, U_ref = sla.lu(dense)
    perm = Pm.argmax(axis=0)
    np.testing.assert_array_equal(P.row_permutation, perm)
    np.testing.assert_allclose(L, L_ref, atol=1e-10)
    np.testing.assert_allclose(U, U_ref, atol=1e-10)
    np.testing.assert_allclose(L @ U, dense[P.row_permutation], atol=1e-10)


def test_ilut_handles_zero_leading_diagonal():
    dense = np.array([[0.0, 2.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 3.0]])
    P = ilu.ilut(SparseMatrix.from_dense(dense), tau=0.0)
    L, U = _dense(P)
    np.testing.assert_allclose(L @ U, dense[P.row_permutation], atol=1e-12)


def test_ilut_drops_small_entries_but_stays_close(rng):
    A = random_sparse(60, 0.05, seed=21, diag_shift=4.0)
    exact = ilu.ilut(A, tau=0.0)
    dropped = ilu.ilut(A, tau=1e-2)
    assert dropped.lower.nnz + dropped.upper.nnz <= exact.lower.nnz + exact.upper.nnz
    L, U = _dense(dropped)
    dense = A.to_dense()
    err = np.linalg.norm(L @ U - dense[dropped.row_permutation]) / np.linalg.norm(dense)
    assert err < 0.1


def test_ilut_negative_tau():
    with pytest.raises(ValueError):
        ilu.ilut(SparseMatrix.identity(3), tau=-1.0)


def test_apply_inverts_exact_factors(rng):
    dense = rng.standard_normal((10, 10)) + 5.0 * np.eye(10)
    A = SparseMatrix.from_dense(dense)
    v = rng.standard_normal(10)
    for P in (ilu.ilut(A, tau=0.0), ilu.build_preconditioner(A, "ilut", tau=0.0, rcm=True, diagscale=True)):
        np.testing.assert_allclose(dense @ ilu.apply(P, v), v, atol=1e-10)


def test_apply_identity_and_length():
    P = ilu.identity_preconditioner(4)
    np.testing.assert_array_equal(ilu.apply(P, [1.0, 2.0, 3.0, 4.0]), [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(DimensionMismatchError):
        ilu.apply(P, np.ones(3))


def test_build_preconditioner_none_and_ilu0(tridiagonal):
    A, dense = tridiagonal
    assert ilu.build_preconditioner(A, PreconditionerKind.NONE) is None
    P = ilu.build_preconditioner(A, "ilu0", rcm=True)
    v = np.arange(1.0, 31.0)
    np.testing.assert_allclose(dense @ ilu.apply(P, v), v, atol=1e-10)


def test_rcm_is_permutation_and_reduces_bandwidth():
    n = 40
    base = sp.diags([np.ones(n - 1), 4.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]).toarray()
    shuffle = np.random.default_rng(3).permutation(n)
    A = SparseMatrix.from_dense(base[shuffle][:, shuffle])
    perm = rcm_ordering(A)
    assert sorted(perm.tolist()) == list(range(n))
    assert bandwidth(A, perm) <= bandwidth(A)
    assert bandwidth(A, perm) == 1
    assert bandwidth(permute_symmetric(A, perm)) == 1


def test_rcm_disconnected_and_diagonal():
    A = SparseMatrix.diag([1.0, 2.0, 3.0])
    perm = rcm_ordering(A)
    assert sorted(perm.tolist()) == [0, 1, 2]
    assert bandwidth(A, perm) == 0


def test_diagonal_scaling():
    A = SparseMatrix.from_dense([[2.0, 4.0], [3.0, 0.0]])
    d, scaled = diagonal_scaling(A)
    np.testing.assert_array_equal(d, [2.0, 1.0])
    np.testing.assert_allclose(scaled.to_dense(), [[1.0, 2.0], [3.0, 0.0]])
