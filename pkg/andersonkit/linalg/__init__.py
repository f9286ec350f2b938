from .dense import QrFactors, least_squares_solve, min_singular_upper_triangular, qr_column_pivoting
from .mmio import parse_matrix_market, read_matrix_market
from .sparse import SparseMatrix, estimate_two_norm, matvec, residual

__all__ = [
    "QrFactors",
    "SparseMatrix",
    "estimate_two_norm",
    "least_squares_solve",
    "matvec",
    "min_singular_upper_triangular",
    "parse_matrix_market",
    "qr_column_pivoting",
    "read_matrix_market",
    "residual",
]
