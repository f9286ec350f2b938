from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from ..errors import MatrixMarketError
from .sparse import SparseMatrix


log = logging.getLogger(__name__)

_FIELDS = {"real", "integer", "double"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric"}


def _parse_header(line: str) -> tuple[str, str]:
    tokens = line.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != "%%matrixmarket":
        raise MatrixMarketError("malformed header, expected '%%MatrixMarket matrix coordinate <field> <symmetry>'", line=1)
    _, obj, fmt, field, symmetry = tokens
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object '{obj}'", line=1)
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format '{fmt}' (only coordinate)", line=1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field '{field}' (real or integer only)", line=1)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry '{symmetry}'", line=1)
    return field, symmetry


def parse_matrix_market(text_stream: Iterable[str]) -> SparseMatrix:
    """Parse a Matrix Market coordinate stream into general CSR storage.

    Symmetric and skew-symmetric storage is expanded to both triangles,
    indices move from 1-based to 0-based and duplicate entries are summed.
    """
    lines = iter(enumerate(text_stream, start=1))
    try:
        _, first = next(lines)
    except StopIteration:
        raise MatrixMarketError("empty stream") from None
    _, symmetry = _parse_header(first)

    size = None
    for lineno, line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise MatrixMarketError("size line must hold 'rows cols nnz'", line=lineno)
        try:
            size = tuple(int(p) for p in parts)
        except ValueError:
            raise MatrixMarketError("non-integer size line", line=lineno) from None
        break
    if size is None:
        raise MatrixMarketError("missing size line")
    n_rows, n_cols, nnz = size
    if n_rows < 0 or n_cols < 0 or nnz < 0:
        raise MatrixMarketError("negative dimension in size line")
    if symmetry != "general" and n_rows != n_cols:
        raise MatrixMarketError(f"{symmetry} matrix must be square")

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    count = 0
    for lineno, line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        if count == nnz:
            raise MatrixMarketError(f"more entries than the declared {nnz}", line=lineno)
        parts = stripped.split()
        if len(parts) != 3:
            raise MatrixMarketError("entry must hold 'row col value'", line=lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry '{stripped}'", line=lineno) from None
        if not math.isfinite(v):
            raise MatrixMarketError(f"non-finite value in entry '{stripped}'", line=lineno)
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(f"index ({i}, {j}) outside declared {n_rows}x{n_cols}", line=lineno)
        if symmetry == "skew-symmetric" and i == j:
            raise MatrixMarketError("skew-symmetric storage cannot hold diagonal entries", line=lineno)
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    if count != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {count}")

    if symmetry != "general":
        off = rows != cols
        sign = -1.0 if symmetry == "skew-symmetric" else 1.0
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, sign * vals[off]]),
        )
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def read_matrix_market(path: Path) -> SparseMatrix:
    path = Path(path)
    with open(path, "r", encoding="ascii", errors="replace") as f:
        A = parse_matrix_market(f)
    log.info("Loaded %s: %dx%d, nnz=%d", path.name, A.n_rows, A.n_cols, A.nnz)
    return A
