from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..constants import SolverMode
from ..errors import ConfigError, SolverBreakdown, StagnationError
from ..linalg.dense import least_squares_solve, min_singular_upper_triangular, qr_column_pivoting
from ..linalg.sparse import SparseMatrix
from ..solvers.anderson import SolveConfig, aar_solve
from ..solvers.history import AndersonHistory
from ..solvers.problem import linear_problem
from ..solvers.trace import IterationTrace
from ..utils.rng import stream


log = logging.getLogger(__name__)

NOISE_STREAM = "noise"


@dataclass(frozen=True)
class NoiseSchedule:
    """Noise magnitude of one sweep entry; epsilon = 0 is the unperturbed baseline."""

    epsilon: float
    k_star: int = 100
    seed: int = 0
    index: int = 0

    @property
    def stream_purpose(self) -> str:
        return f"{NOISE_STREAM}/{self.index}"

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ConfigError("epsilon", f"must be >= 0, got {self.epsilon}")
        if self.k_star < 1:
            raise ConfigError("k_star", f"must be >= 1, got {self.k_star}")


@dataclass(frozen=True)
class NoiseRecord:
    epsilon: float
    iteration: int
    residual_norm: float
    epsilon_k: float = math.nan
    delta_k: float = math.nan
    sigma_min: float = math.nan


@dataclass
class BackwardErrorReport:
    epsilons: List[float]
    records: List[NoiseRecord] = field(default_factory=list)
    traces: Dict[float, IterationTrace] = field(default_factory=dict)

    def iterations(self, epsilon: float) -> int:
        return self.traces[epsilon].iterations

    def to_frame(self) -> pd.DataFrame:
        columns = list(NoiseRecord.__dataclass_fields__)
        return pd.DataFrame([r.__dict__ for r in self.records], columns=columns)


def diag_testcase(n: int = 100) -> tuple[SparseMatrix, np.ndarray]:
    """A = diag(1e-4, 2, 3, ..., n) and b = A * ones."""
    d = np.arange(1, n + 1, dtype=np.float64)
    d[0] = 1e-4
    return SparseMatrix.diag(d), d.copy()


def epsilon_k(eps: float, k_star: int, sigma_min_Tk: float, r_norm: float, dx_norm: float) -> float:
    if r_norm == 0.0 or dx_norm == 0.0:
        raise StagnationError("zero residual or step norm")
    return (eps / k_star) * sigma_min_Tk / (r_norm * dx_norm)


def perturbed_ls_solve(R_k, r_k, eps_k: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Solve min ||(R_k + eps_k ||R_k||_2 E_hat) g - r_k|| with Gaussian E_hat, ||E_hat||_2 = 1.

    E_hat is drawn even when eps_k = 0 so every run consumes the stream alike.
    Returns g and the realized perturbation eps_k ||R_k||_2 E_hat.
    """
    if eps_k < 0:
        raise ValueError("eps_k must be >= 0")
    R = np.asarray(R_k, dtype=np.float64)
    E_hat = rng.standard_normal(R.shape)
    E_hat /= np.linalg.norm(E_hat, 2)
    E = eps_k * np.linalg.norm(R, 2) * E_hat
    g = least_squares_solve(R + E, r_k)
    if not np.all(np.isfinite(g)):
        raise SolverBreakdown("perturbed least-squares collapsed")
    return g, E


def backward_error_delta(E_columns, g) -> float:
    return float(np.linalg.norm(np.asarray(E_columns) @ np.asarray(g)))


class _NoisyLeastSquares:
    """Least-squares hook for aar_solve that perturbs every Anderson solve."""

    def __init__(self, epsilon: float, k_star: int, rng: np.random.Generator) -> None:
        self.epsilon = epsilon
        self.k_star = k_star
        self.rng = rng
        self.steps: Dict[int, tuple[float, float, float]] = {}

    def __call__(self, R: np.ndarray, r: np.ndarray, history: AndersonHistory) -> np.ndarray:
        sigma = min_singular_upper_triangular(qr_column_pivoting(R).t)
        eps_k = 0.0
        if self.epsilon > 0:
            try:
                eps_k = epsilon_k(self.epsilon, self.k_star, sigma, float(np.linalg.norm(r)), history.dx_norms[-1])
            except StagnationError:
                eps_k = 0.0
        g, E = perturbed_ls_solve(R, r, eps_k, self.rng)
        self.steps[history.iterations[-1]] = (eps_k, backward_error_delta(E, g), sigma)
        return g


def noise_lab_config(n: int = 100, max_iter: int = 500, tol: float = 1e-8, omega: float = 1.0) -> SolveConfig:
    """AR with p = 1 and full history while k <= n."""
    return SolveConfig(omega=omega, p=1, m=min(max_iter, n), tol=tol, max_iter=max_iter, mode=SolverMode.ALTERNATING_AA)


def _run_entry(schedule: NoiseSchedule, config: SolveConfig) -> tuple[IterationTrace, list[NoiseRecord]]:
    A, b = diag_testcase()
    epsilon = schedule.epsilon
    hook = _NoisyLeastSquares(epsilon, schedule.k_star, stream(schedule.seed, schedule.stream_purpose))
    _, trace = aar_solve(linear_problem(A, b), config, least_squares=hook)
    records = []
    for rec in trace.records:
        missing = (math.nan, math.nan, math.nan)
        eps_k, delta, sigma = hook.steps.get(rec.iteration, missing) if rec.was_anderson_step else missing
        records.append(NoiseRecord(epsilon, rec.iteration, rec.residual_norm, eps_k, delta, sigma))
    log.info("noise eps=%g: %s after %d iterations", epsilon, trace.status.value, trace.iterations)
    return trace, records


def run_noise_sweep(
    eps_values: Sequence[float],
    config: Optional[SolveConfig] = None,
    seed: int = 0,
    k_star: int = 100,
    jobs: int = 1,
) -> BackwardErrorReport:
    """Run AR on the diagonal test case once per epsilon plus the unperturbed baseline.

    Entry i (the baseline is entry 0) draws E_hat from its own generator
    stream(seed, "noise/i"), so entries share no state and results do not
    depend on jobs.
    """
    if not eps_values:
        raise ValueError("eps_values must be non-empty")
    config = config or noise_lab_config()
    epsilons = [0.0] + [float(e) for e in dict.fromkeys(eps_values) if e != 0]
    schedules = [NoiseSchedule(eps, k_star, seed, index) for index, eps in enumerate(epsilons)]

    def run(schedule: NoiseSchedule):
        return _run_entry(schedule, config)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, schedules))
    else:
        results = [run(s) for s in schedules]

    report = BackwardErrorReport(epsilons=epsilons)
    for eps, (trace, records) in zip(epsilons, results):
        report.traces[eps] = trace
        report.records.extend(records)
    return report


# Bound verification on Full AAR snapshots


@dataclass(frozen=True)
class AarSnapshot:
    """State at the last Anderson step of a short Full AAR run on A x = b."""

    A: np.ndarray
    b: np.ndarray
    x: np.ndarray
    r: np.ndarray
    X: np.ndarray
    R: np.ndarray
    dx_norms: np.ndarray
    omega: float


@dataclass(frozen=True)
class BoundTrial:
    kind: str
    trial: int
    n: int
    columns: int
    epsilon: float
    measured: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.measured <= self.bound


def aar_snapshot(A: np.ndarray, b: np.ndarray, steps: int, p: int = 1, omega: float = 1.0) -> AarSnapshot:
    captured: dict = {}

    def capture(R: np.ndarray, r: np.ndarray, history: AndersonHistory) -> np.ndarray:
        captured.update(
            x=history.previous_x.copy(),
            r=r.copy(),
            X=history.x_matrix(),
            R=R.copy(),
            dx_norms=np.asarray(history.dx_norms),
        )
        return least_squares_solve(R, r)

    max_iter = steps * p + 1
    config = SolveConfig(omega=omega, p=p, m=max_iter, tol=1e-300, max_iter=max_iter, mode=SolverMode.ALTERNATING_AA)
    aar_solve(linear_problem(SparseMatrix.from_dense(A), b), config, least_squares=capture)
    if not captured:
        raise SolverBreakdown("run ended before the first Anderson step")
    return AarSnapshot(A=A, b=b, omega=omega, **captured)


def _trial_system(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    A = np.eye(n) + 0.3 * rng.standard_normal((n, n)) / math.sqrt(n)
    return A, rng.standard_normal(n)


def _unit_spectral(rng: np.random.Generator, n: int) -> np.ndarray:
    Z = rng.standard_normal((n, n))
    return Z / np.linalg.norm(Z, 2)


def _sigma_min(M: np.ndarray) -> float:
    return float(np.linalg.svd(M, compute_uv=False).min())


def perturbation_columns(
    snap: AarSnapshot,
    epsilon: float,
    rng: np.random.Generator,
    shrink: float = 1.0,
    max_rounds: int = 200,
) -> tuple[np.ndarray, float]:
    """Column perturbation with columns E_i (r^i - r^(i-1)).

    Each E_i has ||E_i|| <= shrink * sigma_min(R + perturbation) * eps /
    (l ||r|| ||dx_i||); the guess for the perturbed sigma_min shrinks until it
    holds. Returns the perturbation and its exact sigma_min.
    """
    R = snap.R
    n, l = R.shape
    r_norm = float(np.linalg.norm(snap.r))
    directions = [_unit_spectral(rng, n) for _ in range(l)]
    fractions = rng.uniform(0.5, 1.0, size=l)
    guess = _sigma_min(R)
    for _ in range(max_rounds):
        scales = shrink * guess * epsilon / (l * r_norm * snap.dx_norms) * fractions
        cols = np.column_stack([scales[i] * directions[i] @ R[:, i] for i in range(l)])
        sigma_hat = _sigma_min(R + cols)
        if sigma_hat >= guess:
            return cols, sigma_hat
        guess = 0.9 * sigma_hat
    raise SolverBreakdown("could not construct an admissible perturbation")


def matrix_bound_trial(rng: np.random.Generator, trial: int = 0) -> BoundTrial:
    """Perturbed matrix only: delta_k <= eps ||A||_2."""
    n = int(rng.integers(12, 41))
    A, b = _trial_system(rng, n)
    snap = aar_snapshot(A, b, steps=int(rng.integers(2, 6)), p=int(rng.integers(1, 3)))
    eps = float(10 ** rng.uniform(-8, -1))
    cols, _ = perturbation_columns(snap, eps, rng)
    g_hat = least_squares_solve(snap.R + cols, snap.r)
    delta = backward_error_delta(cols, g_hat)
    bound = eps * np.linalg.norm(A, 2)
    return BoundTrial("matrix", trial, n, snap.R.shape[1], eps, delta, bound * (1 + 1e-10))


def _rhs_perturbation(snap: AarSnapshot, eps: float, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(snap.r.size)
    return v / np.linalg.norm(v) * rng.uniform(0.5, 1.0) * eps * np.linalg.norm(snap.r)


def matrix_rhs_bound_trial(rng: np.random.Generator, trial: int = 0) -> BoundTrial:
    """Perturbed matrix and right-hand side: delta_k <= eps max(||A||_2, ||r||)."""
    n = int(rng.integers(12, 41))
    A, b = _trial_system(rng, n)
    snap = aar_snapshot(A, b, steps=int(rng.integers(2, 6)), p=int(rng.integers(1, 3)))
    eps = float(10 ** rng.uniform(-8, -1))
    cols, _ = perturbation_columns(snap, eps, rng, shrink=1.0 / (1.0 + eps))
    dr = _rhs_perturbation(snap, eps, rng)
    g_hat = least_squares_solve(snap.R + cols, snap.r + dr)
    delta = backward_error_delta(cols, g_hat)
    bound = eps * max(np.linalg.norm(A, 2), np.linalg.norm(snap.r))
    return BoundTrial("matrix_rhs", trial, n, snap.R.shape[1], eps, delta, bound * (1 + 1e-10))


def _next_residual(snap: AarSnapshot, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x_bar = snap.x - snap.X @ g
    x_next = x_bar + snap.omega * (snap.b - snap.A @ x_bar)
    return snap.b - snap.A @ x_next, x_next


def residual_bound_trial(rng: np.random.Generator, trial: int = 0) -> BoundTrial:
    """Deviation of the next residual: ||r_hat - r|| <= C (sqrt(2) kappa + kappa_hat) eps max(||r||, ||A||)."""
    n = int(rng.integers(12, 41))
    A, b = _trial_system(rng, n)
    snap = aar_snapshot(A, b, steps=int(rng.integers(2, 6)), p=int(rng.integers(1, 3)))
    eps = float(10 ** rng.uniform(-6, -1))
    cols, sigma_hat = perturbation_columns(snap, eps, rng, shrink=1.0 / (1.0 + eps))
    dr = _rhs_perturbation(snap, eps, rng)
    exact, x_next = _next_residual(snap, least_squares_solve(snap.R, snap.r))
    approx, _ = _next_residual(snap, least_squares_solve(snap.R + cols, snap.r + dr))
    singular = np.linalg.svd(snap.R, compute_uv=False)
    kappa = singular.max() / singular.min()
    kappa_hat = singular.max() / sigma_hat
    norm_A = np.linalg.norm(A, 2)
    C = np.linalg.norm(np.eye(n) - snap.omega * A, 2)
    eps_tilde = eps * max(np.linalg.norm(snap.r), norm_A)
    # round-off in forming the two residuals
    slack = 64 * np.finfo(float).eps * (np.linalg.norm(b) + norm_A * np.linalg.norm(x_next))
    bound = C * (math.sqrt(2) * kappa + kappa_hat) * eps_tilde * (1 + 1e-10) + slack
    return BoundTrial("residual", trial, n, snap.R.shape[1], eps, float(np.linalg.norm(approx - exact)), bound)


def verify_bounds(trials: int = 100, seed: int = 0) -> pd.DataFrame:
    """Run every bound check `trials` times; one row per trial."""
    rows = []
    for kind, check in (("matrix", matrix_bound_trial), ("matrix_rhs", matrix_rhs_bound_trial), ("residual", residual_bound_trial)):
        rng = stream(seed, f"verify/{kind}")
        for t in range(trials):
            result = check(rng, t)
            rows.append({**result.__dict__, "holds": result.holds})
            if not result.holds:
                log.warning("%s trial %d violated: %.3e > %.3e", kind, t, result.measured, result.bound)
    return pd.DataFrame(rows, columns=["kind", "trial", "n", "columns", "epsilon", "measured", "bound", "holds"])
