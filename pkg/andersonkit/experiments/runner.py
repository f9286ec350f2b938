from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..constants import AA, ALTERNATING_AA, PICARD, RANDOMIZED, SUBSELECTED, ProjectionStrategy, SolverMode
from ..errors import ConfigError
from ..reduced.controller import AdaptiveController
from ..reduced.projection import ProjectionPlan
from ..solvers.anderson import SolveConfig, aar_solve
from ..solvers.problem import FixedPointProblem
from ..solvers.trace import IterationTrace


_MODES = {
    PICARD: (SolverMode.PICARD, ProjectionStrategy.NONE),
    AA: (SolverMode.AA, ProjectionStrategy.NONE),
    ALTERNATING_AA: (SolverMode.ALTERNATING_AA, ProjectionStrategy.NONE),
    SUBSELECTED: (SolverMode.REDUCED_ALTERNATING_AA, ProjectionStrategy.SUBSELECT),
    RANDOMIZED: (SolverMode.REDUCED_ALTERNATING_AA, ProjectionStrategy.RANDOMIZED),
}

FIXED_POINT_SOLVERS = tuple(_MODES)


@dataclass(frozen=True)
class SolverSettings:
    """Parameters shared by every fixed-point solver of an experiment."""

    omega: float = 0.2
    p: int = 3
    m: int = 20
    tol: float = 1e-8
    max_iter: Optional[int] = None
    batch_frac: float = 0.1
    gamma0: float = 1.0
    gamma_shrink: float = 0.5
    epsilon: float = 1e-8
    k_star: Optional[int] = None

    def with_max_iter(self, n: int) -> "SolverSettings":
        """Fill an unset max_iter with 10 n."""
        return self if self.max_iter is not None else replace(self, max_iter=10 * n)


def build_solver(name: str, n: int, settings: SolverSettings, seed: int = 0):
    """SolveConfig, ProjectionPlan and AdaptiveController for a named solver."""
    if name not in _MODES:
        raise ConfigError("solver", f"unknown solver {name!r}; expected one of {', '.join(_MODES)}")
    mode, strategy = _MODES[name]
    settings = settings.with_max_iter(n)
    config = SolveConfig(
        omega=settings.omega,
        p=settings.p,
        m=settings.m,
        tol=settings.tol,
        max_iter=settings.max_iter,
        mode=mode,
    )
    if strategy is ProjectionStrategy.NONE:
        return config, None, None
    plan = ProjectionPlan.initial(strategy, n, settings.batch_frac, seed)
    controller = AdaptiveController.for_problem(
        n,
        settings.max_iter,
        gamma0=settings.gamma0,
        epsilon=settings.epsilon,
        gamma_shrink=settings.gamma_shrink,
        k_star=settings.k_star,
    )
    return config, plan, controller


def run_named_solver(
    name: str,
    problem: FixedPointProblem,
    settings: SolverSettings,
    seed: int = 0,
    x0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, IterationTrace]:
    config, plan, controller = build_solver(name, problem.dimension, settings, seed)
    return aar_solve(problem, config, plan=plan, controller=controller, seed=seed, x0=x0)
