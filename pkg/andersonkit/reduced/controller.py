from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, StagnationError
from .projection import ProjectionPlan


log = logging.getLogger(__name__)


@dataclass
class AdaptiveController:
    """Accept/rollback state of one reduced solve."""

    gamma: float = 1.0
    k_star: int = 1
    epsilon: float = 1e-8
    gamma_shrink: float = 0.5
    last_accepted_anderson_residual: float = math.inf
    rollbacks: int = 0

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ConfigError("gamma0", f"must be > 0, got {self.gamma}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon", f"must be > 0, got {self.epsilon}")
        if self.k_star < 1:
            raise ConfigError("k_star", f"must be >= 1, got {self.k_star}")
        if not 0.0 < self.gamma_shrink < 1.0:
            raise ConfigError("gamma_shrink", f"must be in (0, 1), got {self.gamma_shrink}")

    @classmethod
    def for_problem(
        cls,
        n: int,
        max_iter: int,
        gamma0: float = 1.0,
        epsilon: float = 1e-8,
        gamma_shrink: float = 0.5,
        k_star: Optional[int] = None,
    ) -> "AdaptiveController":
        """k_star defaults to min(max_iter, n)."""
        return cls(
            gamma=gamma0,
            k_star=int(k_star) if k_star else max(1, min(max_iter, n)),
            epsilon=epsilon,
            gamma_shrink=gamma_shrink,
        )


@dataclass(frozen=True)
class BoundWitness:
    iteration: int
    b_i: float
    e_i_norm_estimate: float
    satisfied: bool


class Action(Enum):
    ACCEPT = "accept"
    ROLLBACK_AND_REFINE = "rollback_and_refine"
    PROCEED_WITH_REFINE = "proceed_with_refine"


@dataclass(frozen=True)
class Decision:
    action: Action
    new_s: int


@dataclass(frozen=True)
class StepResult:
    """What the controller sees at an Anderson step.

    trial_norm is ||r|| at the current Anderson iteration, prior_norm the value
    at the previous accepted one; prior_s is the row count that step used.
    delta_r_norm is the norm of the residual rows left out of the selection.
    """

    trial_norm: float
    prior_norm: float
    delta_r_norm: float
    s: int
    witnesses: Sequence[BoundWitness] = field(default_factory=tuple)
    prior_s: Optional[int] = None


def heuristic_bound(gamma: float, k_star: int, r_i_norm: float, dx_i_norm: float) -> float:
    """B_i = gamma / (k_star * ||r^i|| * ||x^i - x^(i-1)||)."""
    if r_i_norm <= 0.0 or dx_i_norm <= 0.0:
        raise StagnationError(f"heuristic bound needs positive norms, got r={r_i_norm}, dx={dx_i_norm}")
    return gamma / (k_star * r_i_norm * dx_i_norm)


def bound_surrogate(
    R_k: np.ndarray,
    rows: np.ndarray,
    ctrl: AdaptiveController,
    r_norms: Sequence[float],
    dx_norms: Sequence[float],
    iterations: Optional[Sequence[int]] = None,
) -> list[BoundWitness]:
    """Compare each column's restriction defect with B_i * epsilon.

    The defect of column i is ||R_k[unselected, i]|| / ||R_k[:, i]||. Columns
    whose norms vanish carry no information and are reported as satisfied.
    """
    R = np.asarray(R_k, dtype=np.float64)
    full = np.linalg.norm(R, axis=0)
    kept = np.linalg.norm(R[np.asarray(rows, dtype=np.int64)], axis=0)
    if iterations is None:
        iterations = range(R.shape[1])
    witnesses = []
    for col, it in enumerate(iterations):
        if full[col] == 0.0:
            witnesses.append(BoundWitness(int(it), math.inf, 0.0, True))
            continue
        defect = math.sqrt(max(full[col] ** 2 - kept[col] ** 2, 0.0)) / full[col]
        try:
            b_i = heuristic_bound(ctrl.gamma, ctrl.k_star, float(r_norms[col]), float(dx_norms[col]))
        except StagnationError:
            log.debug("Column %d has a zero norm; skipping bound check", it)
            witnesses.append(BoundWitness(int(it), math.inf, defect, True))
            continue
        witnesses.append(BoundWitness(int(it), b_i, defect, defect <= b_i * ctrl.epsilon))
    return witnesses


def _rhs_within_bound(ctrl: AdaptiveController, step_result: StepResult) -> bool:
    if not step_result.witnesses:
        return True
    b_k = step_result.witnesses[-1].b_i
    if math.isinf(b_k):
        return True
    return step_result.delta_r_norm <= b_k * ctrl.epsilon * step_result.trial_norm


def controller_step(ctrl: AdaptiveController, plan: ProjectionPlan, step_result: StepResult) -> Decision:
    """One decision of the accept/rollback protocol.

    - s = n: the step is exact, accept.
    - any witness violated, or the dropped part of the residual exceeds
      eps B_k ||r|| (B_k of the newest column): enlarge s by one batch for
      this step and retry.
    - residual dropped since the previous Anderson step (or that step was
      exact): accept.
    - otherwise shrink gamma, grow the plan floor past the previous step's s
      and roll that step back.
    """
    s = step_result.s
    if s >= plan.n:
        return Decision(Action.ACCEPT, plan.n)
    if not all(w.satisfied for w in step_result.witnesses) or not _rhs_within_bound(ctrl, step_result):
        return Decision(Action.PROCEED_WITH_REFINE, plan.grown(s))
    prior_s = step_result.prior_s if step_result.prior_s is not None else s
    if step_result.trial_norm < step_result.prior_norm or prior_s >= plan.n:
        return Decision(Action.ACCEPT, s)
    ctrl.gamma *= ctrl.gamma_shrink
    ctrl.rollbacks += 1
    plan.s_current = plan.grown(max(plan.s_current, prior_s))
    log.debug("Rollback: ||r||=%.3e >= %.3e, gamma=%.3g, s=%d", step_result.trial_norm, step_result.prior_norm, ctrl.gamma, plan.s_current)
    return Decision(Action.ROLLBACK_AND_REFINE, plan.s_current)
