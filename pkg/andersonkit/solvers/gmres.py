from __future__ import annotations

import logging
import math
import time
from typing import Optional

import numpy as np
import scipy.linalg as sla

from ..constants import RunStatus
from ..errors import DimensionMismatchError
from ..linalg.sparse import SparseMatrix, matvec, residual
from ..precond.ilu import Preconditioner, apply
from .trace import IterationTrace


log = logging.getLogger(__name__)


def gmres_solve(
    A: SparseMatrix,
    b,
    P: Optional[Preconditioner] = None,
    restart: int = 50,
    tol: float = 1e-8,
    max_iter: Optional[int] = None,
    x0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, IterationTrace]:
    """Restarted, left-preconditioned GMRES.

    Arnoldi with modified Gram-Schmidt and Givens rotations. The trace holds
    one record per inner iteration (index = operator applications) with the
    implicit residual estimate; the last record of every cycle carries the
    true preconditioned residual. max_iter defaults to 10 n.
    """
    if not A.is_square():
        raise DimensionMismatchError(f"square matrix required, got {A.n_rows}x{A.n_cols}")
    if restart < 1:
        raise ValueError("restart must be >= 1")
    n = A.n_rows
    max_iter = 10 * n if max_iter is None else max_iter
    rhs = np.asarray(b, dtype=np.float64)

    def precond(v: np.ndarray) -> np.ndarray:
        return apply(P, v) if P is not None else v

    start = time.perf_counter()
    trace = IterationTrace()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    r = precond(residual(A, rhs, x))
    beta = float(np.linalg.norm(r))
    trace.initial_residual_norm = beta
    trace.record(0, beta, wall_time=0.0)
    if beta == 0.0:
        trace.status = RunStatus.CONVERGED
        return x, trace
    r0 = beta
    total = 0
    m = min(restart, n)

    while True:
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        steps = 0
        happy = False
        for j in range(m):
            w = precond(matvec(A, V[j]))
            for i in range(j + 1):
                H[i, j] = w @ V[i]
                w -= H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            happy = H[j + 1, j] <= np.finfo(float).eps * np.linalg.norm(H[: j + 1, j])
            if not happy:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                hij = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = hij
            denom = math.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                trace.status = RunStatus.BREAKDOWN
                trace.notes.append(f"iteration {total + 1}: singular Hessenberg column")
                log.warning("GMRES breakdown at iteration %d", total + 1)
                break
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j], H[j + 1, j] = denom, 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            steps = j + 1
            total += 1
            trace.record(total, abs(g[j + 1]), wall_time=time.perf_counter() - start)
            if happy or abs(g[j + 1]) <= tol * r0 or total >= max_iter:
                break

        if steps:
            y = sla.solve_triangular(H[:steps, :steps], g[:steps], lower=False, check_finite=False)
            x = x + V[:steps].T @ y
        if trace.status is RunStatus.BREAKDOWN:
            break
        r = precond(residual(A, rhs, x))
        new_beta = float(np.linalg.norm(r))
        if trace.records:
            trace.records[-1].residual_norm = new_beta
        if new_beta <= tol * r0:
            trace.status = RunStatus.CONVERGED
            break
        if total >= max_iter:
            trace.status = RunStatus.MAX_ITER
            break
        if new_beta >= beta * (1.0 - 1e-12):
            trace.status = RunStatus.MAX_ITER
            trace.notes.append(f"stagnation after {total} iterations")
            log.warning("GMRES stagnated at iteration %d (relative residual %.3e)", total, new_beta / r0)
            break
        beta = new_beta

    trace.timers["total"] = time.perf_counter() - start
    log.info("gmres(%d): %s after %d iterations, relative residual %.3e", restart, trace.status.value, trace.iterations, trace.final_relative_residual)
    return x, trace
