from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from ..constants import BOLTZMANN_SOLVERS, PICARD
from ..solvers.problem import FixedPointProblem
from ..utils.rng import stream_seed
from .runner import SolverSettings, run_named_solver


log = logging.getLogger(__name__)

KernelOp = Callable[[np.ndarray], np.ndarray]

E_MIN = 0.1
SUITE_COLUMNS = [
    "density",
    "solver",
    "mean_iterations",
    "mean_wall_time_s",
    "converged",
    "admissibility_violations",
    "max_abs_diff_vs_picard",
]


@dataclass(frozen=True)
class KineticGrid:
    """Angle-major phase-space grid: unknown (a, e) sits at a * n_energies + e."""

    n_angles: int
    n_energies: int
    energy_nodes: np.ndarray
    quadrature_weights: np.ndarray

    @property
    def dimension(self) -> int:
        return self.n_angles * self.n_energies

    def as_table(self, f: np.ndarray) -> np.ndarray:
        return np.asarray(f, dtype=np.float64).reshape(self.n_angles, self.n_energies)

    def angular_average(self, f: np.ndarray) -> np.ndarray:
        """Weighted average over angles, one value per energy node."""
        return self.quadrature_weights @ self.as_table(f)


def build_grid(n_angles: int = 110, n_energies: int = 64, e_max: float = 300.0, e_min: float = E_MIN) -> KineticGrid:
    """Energies e_min * rho^j ending at e_max; uniform angular weights summing to 1."""
    if n_angles < 1 or n_energies < 1:
        raise ValueError("grid counts must be >= 1")
    if not e_max > 0:
        raise ValueError("e_max must be > 0")
    if n_energies == 1:
        nodes = np.array([float(e_max)])
    else:
        if not 0 < e_min < e_max:
            raise ValueError("need 0 < e_min < e_max")
        nodes = np.geomspace(e_min, e_max, n_energies)
    weights = np.full(n_angles, 1.0 / n_angles)
    return KineticGrid(n_angles, n_energies, nodes, weights)


@dataclass(frozen=True)
class DistributionState:
    f: np.ndarray
    f_n: np.ndarray
    dt: float = 1.0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if np.shape(self.f) != np.shape(self.f_n):
            raise ValueError("f and f_n must have the same shape")

    def admissible(self) -> bool:
        return bool(np.all((self.f >= 0.0) & (self.f <= 1.0)))


@dataclass(frozen=True)
class SyntheticKernels:
    density: float
    eta_total: KernelOp
    chi_total: KernelOp


def absorption_profile(energies: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + energies / 10.0)


def emission_profile(energies: np.ndarray) -> np.ndarray:
    return 0.5 * np.exp(-energies / 50.0)


def synthetic_kernels(density: float, grid: KineticGrid) -> SyntheticKernels:
    """Isotropic scattering-like kernels whose stiffness grows with density.

    eta(a, e) = d kappa(e) <f>_e + d sigma(e)
    chi(a, e) = d kappa(e) (1 + <f>_e)
    """
    if not density > 0:
        raise ValueError("density must be > 0")
    kappa = absorption_profile(grid.energy_nodes)
    source = density * emission_profile(grid.energy_nodes)

    def tiled(per_energy: np.ndarray) -> np.ndarray:
        return np.tile(per_energy, grid.n_angles)

    def eta(f: np.ndarray) -> np.ndarray:
        return tiled(density * kappa * grid.angular_average(f) + source)

    def chi(f: np.ndarray) -> np.ndarray:
        return tiled(density * kappa * (1.0 + grid.angular_average(f)))

    return SyntheticKernels(density, eta, chi)


def boltzmann_g(state: DistributionState, kernels: SyntheticKernels) -> np.ndarray:
    """Backward-Euler collision stage G(f) = (f^n + dt eta(f)) / (1 + dt chi(f))."""
    chi = kernels.chi_total(state.f)
    if np.any(chi < 0):
        raise ValueError("negative opacity")
    return (state.f_n + state.dt * kernels.eta_total(state.f)) / (1.0 + state.dt * chi)


def initial_distribution(grid: KineticGrid) -> np.ndarray:
    """f^n(a, e) = 0.5 exp(-e / 100), isotropic."""
    return np.tile(0.5 * np.exp(-grid.energy_nodes / 100.0), grid.n_angles)


@dataclass
class AdmissibilityMonitor:
    """Counts operator inputs that left [0, 1]; iterates are never clipped."""

    violations: int = 0
    worst: float = 0.0

    def check(self, f: np.ndarray) -> None:
        excess = max(float(-f.min()), float(f.max()) - 1.0)
        if excess > 0:
            self.violations += 1
            self.worst = max(self.worst, excess)


def boltzmann_problem(
    kernels: SyntheticKernels,
    f_n: np.ndarray,
    dt: float = 1.0,
    monitor: Optional[AdmissibilityMonitor] = None,
) -> FixedPointProblem:
    f_n = np.asarray(f_n, dtype=np.float64)

    def evaluate(f: np.ndarray) -> np.ndarray:
        if monitor is not None:
            monitor.check(f)
        return boltzmann_g(DistributionState(f, f_n, dt), kernels)

    return FixedPointProblem(dimension=f_n.size, evaluate_g=evaluate)


@dataclass(frozen=True)
class BoltzmannSettings:
    solver: SolverSettings = field(
        default_factory=lambda: SolverSettings(omega=1.0, p=3, m=3, tol=1e-10, max_iter=20_000, epsilon=1e-8)
    )
    n_angles: int = 110
    n_energies: int = 64
    e_min: float = E_MIN
    e_max: float = 300.0
    dt: float = 1.0
    repeats: int = 30
    jobs: int = 1
    seed: int = 0


@dataclass
class _Cell:
    density: float
    solver: str
    iterations: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    converged: bool = True
    violations: int = 0
    solution: Optional[np.ndarray] = None


def _run_cell(density: float, solver: str, grid: KineticGrid, f_n: np.ndarray, settings: BoltzmannSettings) -> _Cell:
    kernels = synthetic_kernels(density, grid)
    cell = _Cell(density, solver)
    for rep in range(settings.repeats):
        monitor = AdmissibilityMonitor()
        problem = boltzmann_problem(kernels, f_n, settings.dt, monitor)
        seed = stream_seed(settings.seed, f"boltzmann/{density!r}/{solver}/{rep}")
        t0 = time.perf_counter()
        f, trace = run_named_solver(solver, problem, settings.solver, seed=seed, x0=f_n)
        cell.wall_times.append(time.perf_counter() - t0)
        cell.iterations.append(trace.iterations)
        cell.converged &= trace.converged
        cell.violations += monitor.violations
        cell.solution = f
    log.info(
        "density=%g %s: %.1f iterations, converged=%s, %d inadmissible iterates",
        density, solver, float(np.mean(cell.iterations)), cell.converged, cell.violations,
    )
    return cell


def run_boltzmann_suite(
    densities: Sequence[float],
    solvers: Iterable[str] = BOLTZMANN_SOLVERS,
    settings: Optional[BoltzmannSettings] = None,
) -> pd.DataFrame:
    """Every (density, solver) cell solved `repeats` times from x0 = f^n."""
    if not densities:
        raise ValueError("densities must be non-empty")
    settings = settings or BoltzmannSettings()
    if settings.repeats < 1:
        raise ValueError("repeats must be >= 1")
    solvers = list(solvers)
    grid = build_grid(settings.n_angles, settings.n_energies, settings.e_max, settings.e_min)
    f_n = initial_distribution(grid)
    jobs = [(float(d), s) for d in densities for s in solvers]

    def run(job: tuple[float, str]) -> _Cell:
        return _run_cell(job[0], job[1], grid, f_n, settings)

    if settings.jobs > 1:
        with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
            cells = list(pool.map(run, jobs))
    else:
        cells = [run(job) for job in jobs]

    picard: Dict[float, np.ndarray] = {c.density: c.solution for c in cells if c.solver == PICARD}
    rows = []
    for c in cells:
        ref = picard.get(c.density)
        diff = float(np.max(np.abs(c.solution - ref))) if ref is not None else math.nan
        rows.append(
            {
                "density": c.density,
                "solver": c.solver,
                "mean_iterations": float(np.mean(c.iterations)),
                "mean_wall_time_s": float(np.mean(c.wall_times)),
                "converged": c.converged,
                "admissibility_violations": c.violations,
                "max_abs_diff_vs_picard": diff,
            }
        )
    return pd.DataFrame(rows, columns=SUITE_COLUMNS)
