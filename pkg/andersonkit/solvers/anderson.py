from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..constants import RunStatus, SolverMode
from ..errors import ConfigError, DimensionMismatchError, SolverBreakdown
from ..linalg.dense import least_squares_solve
from ..reduced.controller import Action, AdaptiveController, StepResult, bound_surrogate, controller_step
from ..reduced.projection import ProjectionPlan, project_ls, select_rows
from ..utils.rng import stream
from ..utils.timing import Stopwatch
from .history import AndersonHistory
from .problem import FixedPointProblem
from .trace import IterationTrace


log = logging.getLogger(__name__)

LeastSquares = Callable[[np.ndarray, np.ndarray], np.ndarray]
LeastSquaresHook = Callable[[np.ndarray, np.ndarray, AndersonHistory], np.ndarray]


@dataclass(frozen=True)
class SolveConfig:
    omega: float = 1.0
    p: int = 1
    m: int = 5
    tol: float = 1e-8
    max_iter: int = 1000
    mode: SolverMode = SolverMode.ALTERNATING_AA

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "mode", SolverMode(self.mode))
        except ValueError:
            raise ConfigError("mode", f"unknown solver mode {self.mode!r}") from None
        if not self.omega > 0:
            raise ConfigError("omega", f"must be > 0, got {self.omega}")
        if self.p < 1:
            raise ConfigError("p", f"must be >= 1, got {self.p}")
        if self.m < 1:
            raise ConfigError("m", f"must be >= 1, got {self.m}")
        if not self.tol > 0:
            raise ConfigError("tol", f"must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError("max_iter", f"must be >= 1, got {self.max_iter}")

    @property
    def anderson_period(self) -> Optional[int]:
        """Iterations between Anderson steps; None for plain Picard."""
        if self.mode is SolverMode.PICARD:
            return None
        if self.mode is SolverMode.AA:
            return 1
        return self.p


def richardson_step(x: np.ndarray, r: np.ndarray, omega: float) -> np.ndarray:
    return x + omega * r


def anderson_mixing(
    history: AndersonHistory,
    r_k: np.ndarray,
    ls: LeastSquares = least_squares_solve,
    omega: float = 1.0,
) -> np.ndarray:
    """Anderson update x^(k+1) - x^k = omega r_k - (X_k + omega R_k) g.

    g = ls(R_k, r_k). With omega = 1 this is r_k - (X_k + R_k) g; a general
    omega is the same mixing applied to the relaxed map G_omega.
    """
    if len(history) == 0:
        raise ValueError("Anderson mixing needs at least one history column")
    X = history.x_matrix()
    R = history.r_matrix()
    try:
        g = ls(R, r_k)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverBreakdown(f"least-squares failed: {exc}") from exc
    if not np.all(np.isfinite(g)):
        raise SolverBreakdown("least-squares returned non-finite coefficients")
    return omega * r_k - (X + omega * R) @ g


def anderson_split_step(
    problem: FixedPointProblem,
    x: np.ndarray,
    history: AndersonHistory,
    g: np.ndarray,
    omega: float = 1.0,
) -> np.ndarray:
    """Two-step linear form: x_bar = x - X g, then a Richardson step from x_bar."""
    x_bar = x - history.x_matrix() @ g
    return richardson_step(x_bar, problem.residual_of(x_bar), omega)


def _checked_residual(problem: FixedPointProblem, x: np.ndarray) -> np.ndarray:
    r = np.asarray(problem.residual_of(x), dtype=np.float64)
    if r.shape != (problem.dimension,):
        raise DimensionMismatchError(f"residual has shape {r.shape}, expected ({problem.dimension},)")
    if not np.all(np.isfinite(r)):
        raise SolverBreakdown("non-finite residual")
    return r


@dataclass
class _Checkpoint:
    iteration: int
    x: np.ndarray
    r: np.ndarray
    r_norm: float
    history: AndersonHistory
    prior_norm: float
    s_used: int


class _AarRun:
    """State of one (alternating, possibly reduced) Anderson solve."""

    def __init__(
        self,
        problem: FixedPointProblem,
        config: SolveConfig,
        plan: Optional[ProjectionPlan],
        controller: Optional[AdaptiveController],
        seed: int,
        least_squares: Optional[LeastSquaresHook],
    ) -> None:
        if config.mode is SolverMode.REDUCED_ALTERNATING_AA and (plan is None or not plan.active):
            raise ConfigError("projection", "reduced_alternating_aa needs a subselect or randomized projection")
        if plan is not None and plan.n != problem.dimension:
            raise ConfigError("projection", f"plan is for n={plan.n}, problem has n={problem.dimension}")
        self.problem = problem
        self.config = config
        self.plan = plan if plan is not None and plan.active else None
        self.controller = controller if self.plan is not None else None
        self.least_squares = least_squares
        self.rng = stream(seed, "projection")
        self.watch = Stopwatch()
        self.trace = IterationTrace()
        self.history = AndersonHistory(config.m)
        self.checkpoint: Optional[_Checkpoint] = None
        self._start = time.perf_counter()

    def _elapsed(self) -> float:
        return time.perf_counter() - self._start

    def _record(self, k: int, r_norm: float, **kwargs) -> None:
        self.trace.record(k, r_norm, wall_time=self._elapsed(), **kwargs)

    def _solve_ls(self, R: np.ndarray, r: np.ndarray) -> np.ndarray:
        with self.watch.section("least_squares"):
            if self.least_squares is not None:
                return self.least_squares(R, r, self.history)
            return least_squares_solve(R, r)

    def _mix(self, r: np.ndarray, rows: Optional[np.ndarray]) -> np.ndarray:
        if rows is None:
            return anderson_mixing(self.history, r, self._solve_ls, self.config.omega)

        def reduced_ls(R: np.ndarray, rr: np.ndarray) -> np.ndarray:
            with self.watch.section("selection"):
                R_s, r_s, _ = project_ls(R, rr, rows)
            return self._solve_ls(R_s, r_s)

        return anderson_mixing(self.history, r, reduced_ls, self.config.omega)

    def _anderson_step(self, r: np.ndarray, r_norm: float, redo: bool) -> tuple[Optional[np.ndarray], Optional[int]]:
        """Returns (update, s used); update is None when the controller asks for a rollback."""
        plan = self.plan
        if plan is None:
            return self._mix(r, None), None
        ctrl = self.controller
        s = plan.s_current
        while True:
            with self.watch.section("selection"):
                rows = select_rows(plan, r, s, self.rng)
            if ctrl is None:
                break
            with self.watch.section("control"):
                h = self.history
                witnesses = bound_surrogate(h.r_matrix(), rows, ctrl, h.r_norms, h.dx_norms, h.iterations)
                cp = self.checkpoint
                fresh = redo or cp is None
                kept = float(np.linalg.norm(r[rows]))
                decision = controller_step(
                    ctrl,
                    plan,
                    StepResult(
                        trial_norm=r_norm,
                        prior_norm=math.inf if fresh else cp.r_norm,
                        delta_r_norm=math.sqrt(max(r_norm**2 - kept**2, 0.0)),
                        s=s,
                        witnesses=witnesses,
                        prior_s=plan.n if fresh else cp.s_used,
                    ),
                )
            if decision.action is Action.PROCEED_WITH_REFINE:
                s = decision.new_s
                continue
            if decision.action is Action.ROLLBACK_AND_REFINE:
                return None, None
            break
        s_used = int(rows.size)
        update = self._mix(r, None if s_used == r.size else rows)
        return update, s_used

    def run(self, x0: Optional[np.ndarray]) -> tuple[np.ndarray, IterationTrace]:
        cfg = self.config
        trace = self.trace
        x = np.zeros(self.problem.dimension) if x0 is None else np.array(x0, dtype=np.float64)
        try:
            r = _checked_residual(self.problem, x)
        except SolverBreakdown as exc:
            return self._finish(x, RunStatus.BREAKDOWN, str(exc))
        r0 = float(np.linalg.norm(r))
        trace.initial_residual_norm = r0
        self._record(0, r0)
        if r0 == 0.0:
            return self._finish(x, RunStatus.CONVERGED)

        self.history.push(x, r, 0)
        x = richardson_step(x, r, cfg.omega)
        k = 1
        period = cfg.anderson_period
        redo = False
        while True:
            if not redo:
                try:
                    r = _checked_residual(self.problem, x)
                except SolverBreakdown as exc:
                    return self._finish(x, RunStatus.BREAKDOWN, f"iteration {k}: {exc}")
                self.history.push(x, r, k)
            r_norm = float(np.linalg.norm(r))
            if r_norm <= cfg.tol * r0:
                self._record(k, r_norm)
                return self._finish(x, RunStatus.CONVERGED)
            if k >= cfg.max_iter:
                self._record(k, r_norm)
                return self._finish(x, RunStatus.MAX_ITER)

            if period is None or k % period != 0:
                self._record(k, r_norm)
                x_next = richardson_step(x, r, cfg.omega)
            else:
                try:
                    update, s_used = self._anderson_step(r, r_norm, redo)
                except SolverBreakdown as exc:
                    self._record(k, r_norm)
                    return self._finish(x, RunStatus.BREAKDOWN, f"iteration {k}: {exc}")
                if update is None:
                    self._record(k, r_norm)
                    cp = self.checkpoint
                    log.debug("Rolling back from iteration %d to %d (s=%d)", k, cp.iteration, self.plan.s_current)
                    trace.rollbacks += 1
                    k, x, r = cp.iteration, cp.x, cp.r
                    self.history = cp.history.copy()
                    self.controller.last_accepted_anderson_residual = cp.prior_norm
                    redo = True
                    continue
                self._record(k, r_norm, was_anderson_step=True, reduced_dimension_s=s_used, rollback_flag=redo)
                if self.plan is not None:
                    prior = self.controller.last_accepted_anderson_residual if self.controller else math.inf
                    self.checkpoint = _Checkpoint(k, x, r, r_norm, self.history.copy(), prior, s_used)
                    if self.controller is not None:
                        self.controller.last_accepted_anderson_residual = r_norm
                log.debug("Anderson step k=%d l=%d s=%s ||r||=%.3e", k, len(self.history), s_used, r_norm)
                x_next = x + update
            redo = False
            x = x_next
            k += 1

    def _finish(self, x: np.ndarray, status: RunStatus, note: Optional[str] = None) -> tuple[np.ndarray, IterationTrace]:
        trace = self.trace
        trace.status = status
        trace.timers = dict(self.watch.totals)
        trace.timers["total"] = self._elapsed()
        if note:
            trace.notes.append(note)
        if status is RunStatus.BREAKDOWN:
            log.warning("%s breakdown: %s", self.config.mode.value, note)
        log.info(
            "%s: %s after %d iterations, relative residual %.3e, least-squares time %.4fs",
            self.config.mode.value,
            status.value,
            trace.iterations,
            trace.final_relative_residual,
            trace.timer("least_squares"),
        )
        return x, trace


def aar_solve(
    problem: FixedPointProblem,
    config: SolveConfig,
    plan: Optional[ProjectionPlan] = None,
    controller: Optional[AdaptiveController] = None,
    seed: int = 0,
    x0: Optional[np.ndarray] = None,
    least_squares: Optional[LeastSquaresHook] = None,
) -> tuple[np.ndarray, IterationTrace]:
    """(Alternating) Anderson acceleration of x = G(x).

    Iteration k takes a Richardson step x + omega r unless k is a multiple of
    the Anderson period, where it mixes the last min(k, m) differences. With
    an active ProjectionPlan the mixing least-squares uses selected rows only;
    a controller adds the accept/rollback protocol around those steps. Stops
    when ||r^k|| <= tol ||r^0|| or after max_iter iterations.
    """
    return _AarRun(problem, config, plan, controller, seed, least_squares).run(x0)
