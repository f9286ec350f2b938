from __future__ import annotations

import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..constants import BENCH_SOLVERS, GMRES, PreconditionerKind
from ..errors import MatrixMarketError, PreconditionerError
from ..linalg.mmio import read_matrix_market
from ..linalg.sparse import SparseMatrix, matvec
from ..precond.ilu import Preconditioner, build_preconditioner
from ..solvers.gmres import gmres_solve
from ..solvers.problem import linear_problem
from ..solvers.trace import IterationTrace
from ..utils.rng import stream_seed
from .profiles import BenchRecord
from .runner import FIXED_POINT_SOLVERS, SolverSettings, run_named_solver


log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"
_FLAGS = {"yes": True, "no": False}


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    rcm: bool = False
    diagscale: bool = False


@dataclass(frozen=True)
class BenchSettings:
    solver: SolverSettings = field(default_factory=lambda: SolverSettings(epsilon=1e-4))
    precond: PreconditionerKind = PreconditionerKind.ILU0
    tau: float = 1e-4
    restart: int = 50
    gmres_max_iter: Optional[int] = None
    repeats: int = 1
    timing: bool = True
    jobs: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "precond", PreconditionerKind(self.precond))
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


def parse_manifest(path: Path) -> List[ManifestEntry]:
    """Whitespace-separated `name rcm diagscale` lines, flags yes/no, `#` comments."""
    frame = pd.read_csv(
        path,
        sep=r"\s+",
        comment="#",
        header=None,
        names=["name", "rcm", "diagscale"],
        dtype=str,
        skip_blank_lines=True,
    )
    entries = []
    for row in frame.itertuples(index=False):
        flags = []
        for value in (row.rcm, row.diagscale):
            key = str(value).strip().lower()
            if key not in _FLAGS:
                raise ValueError(f"{path}: bad flag {value!r} for {row.name} (expected yes/no)")
            flags.append(_FLAGS[key])
        entries.append(ManifestEntry(str(row.name), *flags))
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise ValueError(f"{path}: duplicate matrix names")
    return entries


def default_manifest() -> List[ManifestEntry]:
    with resources.as_file(resources.files("andersonkit.data") / "benchmark_manifest.txt") as path:
        return parse_manifest(path)


def discover_problems(matrix_dir: Path) -> list[tuple[ManifestEntry, Path]]:
    """Pair every .mtx file in matrix_dir with its manifest entry.

    The directory's own manifest.txt wins over the shipped one; files the
    manifest does not list are run without reordering or scaling.
    """
    matrix_dir = Path(matrix_dir)
    if not matrix_dir.is_dir():
        raise ValueError(f"matrix directory {matrix_dir} does not exist")
    local = matrix_dir / MANIFEST_NAME
    manifest = parse_manifest(local) if local.exists() else default_manifest()
    by_name = {e.name: e for e in manifest}
    files = sorted(matrix_dir.glob("*.mtx"))
    if not files:
        raise ValueError(f"no Matrix Market files in {matrix_dir}")
    listed = [(by_name[f.stem], f) for f in files if f.stem in by_name]
    listed.sort(key=lambda pair: [e.name for e in manifest].index(pair[0].name))
    extra = [(ManifestEntry(f.stem), f) for f in files if f.stem not in by_name]
    return listed + extra


def _failed(name: str, solvers: Sequence[str], note: str) -> list[BenchRecord]:
    return [
        BenchRecord(name, s, float("nan"), False, 0, float("nan"), status="error", note=note)
        for s in solvers
    ]


def _solve(
    solver: str,
    A: SparseMatrix,
    b: np.ndarray,
    P: Optional[Preconditioner],
    settings: BenchSettings,
    seed: int,
) -> IterationTrace:
    if solver == GMRES:
        _, trace = gmres_solve(A, b, P, restart=settings.restart, tol=settings.solver.tol, max_iter=settings.gmres_max_iter)
        return trace
    _, trace = run_named_solver(solver, linear_problem(A, b, P), settings.solver, seed=seed)
    return trace


def run_problem(entry: ManifestEntry, path: Path, solvers: Sequence[str], settings: BenchSettings) -> list[BenchRecord]:
    """All solvers on one matrix; load or factorization failures mark every solver failed."""
    setup_start = time.perf_counter()
    try:
        A = read_matrix_market(path)
    except (MatrixMarketError, OSError) as exc:
        log.warning("Skipping %s: %s", entry.name, exc)
        return _failed(entry.name, solvers, str(exc))
    if not A.is_square():
        return _failed(entry.name, solvers, f"not square ({A.n_rows}x{A.n_cols})")
    b = matvec(A, np.ones(A.n_cols))
    try:
        P = build_preconditioner(A, settings.precond, settings.tau, rcm=entry.rcm, diagscale=entry.diagscale)
    except PreconditionerError as exc:
        log.warning("Preconditioner failed on %s: %s", entry.name, exc)
        return _failed(entry.name, solvers, f"preconditioner: {exc}")
    setup = time.perf_counter() - setup_start

    records = []
    for solver in solvers:
        seed = stream_seed(settings.seed, f"bench/{entry.name}/{solver}")
        times = []
        for _ in range(settings.repeats):
            t0 = time.perf_counter()
            trace = _solve(solver, A, b, P, settings, seed)
            times.append(time.perf_counter() - t0)
        wall = statistics.median(times)
        records.append(
            BenchRecord(
                problem_name=entry.name,
                solver_name=solver,
                wall_time_s=wall,
                converged=trace.converged,
                iterations=trace.iterations,
                final_relative_residual=trace.final_relative_residual,
                wall_time_min_s=min(times),
                total_time_s=setup + wall,
                least_squares_time_s=trace.timer("least_squares"),
                status=trace.status.value,
                note="; ".join(trace.notes),
            )
        )
        log.info(
            "%s / %s: %s in %d iterations, %.3fs",
            entry.name, solver, trace.status.value, trace.iterations, wall,
        )
    return records


def run_benchmark(
    matrix_dir: Path,
    solvers: Iterable[str] = BENCH_SOLVERS,
    settings: Optional[BenchSettings] = None,
) -> list[BenchRecord]:
    """Run every solver on every matrix of matrix_dir with b = A * ones.

    Problems run concurrently only when jobs > 1 and timing is off, so
    measured wall times never compete for cores.
    """
    settings = settings or BenchSettings()
    solvers = list(solvers)
    unknown = [s for s in solvers if s != GMRES and s not in FIXED_POINT_SOLVERS]
    if unknown:
        raise ValueError(f"unknown solvers: {', '.join(unknown)}")
    problems = discover_problems(matrix_dir)
    log.info("Benchmark: %d matrices x %d solvers (precond=%s)", len(problems), len(solvers), settings.precond.value)

    if settings.jobs > 1 and not settings.timing:
        with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
            batches = list(pool.map(lambda pe: run_problem(pe[0], pe[1], solvers, settings), problems))
    else:
        batches = [run_problem(entry, path, solvers, settings) for entry, path in problems]
    return [record for batch in batches for record in batch]
