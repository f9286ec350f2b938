import numpy as np
import pytest

from andersonkit.errors import DimensionMismatchError
from andersonkit.linalg.dense import least_squares_solve, min_singular_upper_triangular, qr_column_pivoting


def test_qr_reconstructs_with_decreasing_pivots(rng):
    M = rng.standard_normal((30, 6))
    f = qr_column_pivoting(M)
    np.testing.assert_allclose(f.q @ f.t, M[:, f.column_permutation], atol=1e-12)
    np.testing.assert_allclose(f.q.T @ f.q, np.eye(6), atol=1e-12)
    diag = np.abs(np.diag(f.t))
    assert np.all(diag[:-1] >= diag[1:] - 1e-12)
    assert sorted(f.column_permutation.tolist()) == list(range(6))


def test_qr_requires_tall():
    with pytest.raises(DimensionMismatchError):
        qr_column_pivoting(np.ones((2, 3)))


def test_qr_rank_one():
    M = np.outer(np.arange(1.0, 6.0), [1.0, 2.0, -1.0])
    f = qr_column_pivoting(M)
    diag = np.abs(np.diag(f.t))
    assert diag[0] > 1.0
    assert np.all(diag[1:] < 1e-12 * diag[0])


def test_least_squares_matches_lstsq(rng):
    M = rng.standard_normal((50, 8))
    rhs = rng.standard_normal(50)
    g = least_squares_solve(M, rhs)
    expected, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    np.testing.assert_allclose(g, expected, rtol=1e-10, atol=1e-12)
    # normal equations
    np.testing.assert_allclose(M.T @ (M @ g - rhs), 0.0, atol=1e-10)


def test_least_squares_exact_and_zero():
    M = np.array([[2.0, 0.0], [0.0, 4.0], [0.0, 0.0]])
    np.testing.assert_allclose(least_squares_solve(M, [2.0, 8.0, 0.0]), [1.0, 2.0])
    np.testing.assert_array_equal(least_squares_solve(np.zeros((4, 2)), np.ones(4)), [0.0, 0.0])


def test_least_squares_dependent_columns_still_minimise(rng):
    base = rng.standard_normal((20, 3))
    M = np.column_stack([base, base[:, 0] + base[:, 1]])
    rhs = rng.standard_normal(20)
    g = least_squares_solve(M, rhs)
    best, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    assert np.linalg.norm(M @ g - rhs) == pytest.approx(np.linalg.norm(M @ best - rhs), rel=1e-10)
    assert np.count_nonzero(g) <= 3


def test_least_squares_wide_system(rng):
    M = rng.standard_normal((2, 5))
    rhs = rng.standard_normal(2)
    g = least_squares_solve(M, rhs)
    np.testing.assert_allclose(M @ g, rhs, atol=1e-12)


def test_least_squares_rhs_length():
    with pytest.raises(DimensionMismatchError):
        least_squares_solve(np.ones((3, 2)), np.ones(4))


@pytest.mark.parametrize(
    "t, expected",
    [
        (np.diag([3.0, 1.0, 2.0]), 1.0),
        (np.array([[1.0, 1.0], [0.0, 1.0]]), (np.sqrt(5.0) - 1.0) / 2.0),
        (np.array([[5.0, 2.0], [0.0, 0.0]]), 0.0),
    ],
)
def test_min_singular_examples(t, expected):
    assert min_singular_upper_triangular(t) == pytest.approx(expected, abs=1e-14)


def test_min_singular_ignores_lower_triangle():
    t = np.array([[2.0, 0.0], [100.0, 3.0]])
    assert min_singular_upper_triangular(t) == pytest.approx(2.0)
