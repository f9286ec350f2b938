from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..linalg.sparse import SparseMatrix, residual
from ..precond.ilu import Preconditioner, apply


VectorMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FixedPointProblem:
    """x = G(x) on R^dimension."""

    dimension: int
    evaluate_g: VectorMap
    residual_fn: Optional[VectorMap] = None

    def residual_of(self, x: np.ndarray) -> np.ndarray:
        if self.residual_fn is not None:
            return self.residual_fn(x)
        return self.evaluate_g(x) - x


def linear_problem(A: SparseMatrix, b, preconditioner: Optional[Preconditioner] = None) -> FixedPointProblem:
    """G(x) = x + M^-1 (b - A x); its residual is the preconditioned residual.

    Relaxation by omega is applied by the solver, which turns G into G_omega.
    """
    rhs = np.asarray(b, dtype=np.float64)

    def res(x: np.ndarray) -> np.ndarray:
        r = residual(A, rhs, x)
        return apply(preconditioner, r) if preconditioner is not None else r

    return FixedPointProblem(dimension=A.n_cols, evaluate_g=lambda x: x + res(x), residual_fn=res)
