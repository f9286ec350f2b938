from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..constants import RATIO_FAILED


@dataclass(frozen=True)
class BenchRecord:
    problem_name: str
    solver_name: str
    wall_time_s: float
    converged: bool
    iterations: int
    final_relative_residual: float
    wall_time_min_s: float = float("nan")
    total_time_s: float = float("nan")
    least_squares_time_s: float = 0.0
    status: str = ""
    note: str = ""


@dataclass(frozen=True)
class ProfileCurve:
    solver_name: str
    points: list[tuple[float, float]]
    success_probability: float


def records_frame(records: Iterable[BenchRecord]) -> pd.DataFrame:
    rows = [asdict(r) for r in records]
    columns = list(BenchRecord.__dataclass_fields__)
    return pd.DataFrame(rows, columns=columns)


def performance_ratios(
    records: Union[Iterable[BenchRecord], pd.DataFrame],
    r_max: float = RATIO_FAILED,
) -> pd.DataFrame:
    """r[p, s] = t[p, s] / min_s t[p, s]; failures get r_max.

    Problems without any success get r_max for every solver.
    """
    df = records if isinstance(records, pd.DataFrame) else records_frame(records)
    if df.empty:
        raise ValueError("no benchmark records")
    if df.duplicated(["problem_name", "solver_name"]).any():
        raise ValueError("duplicate (problem, solver) record")
    problems = df["problem_name"].unique()
    solvers = df["solver_name"].unique()
    if len(df) != len(problems) * len(solvers):
        raise ValueError("every (problem, solver) pair must be present exactly once")

    times = df.pivot(index="problem_name", columns="solver_name", values="wall_time_s")
    ok = df.pivot(index="problem_name", columns="solver_name", values="converged").astype(bool)
    ok &= times.notna() & (times > 0)
    best = times.where(ok).min(axis=1)
    ratios = times.div(best, axis=0).where(ok, r_max)
    ratios = ratios.fillna(r_max)
    ratios.columns.name = None
    return ratios.loc[list(problems), list(solvers)]


def profile_curves(
    ratios: pd.DataFrame,
    tau_grid: Optional[Sequence[float]] = None,
    r_max: float = RATIO_FAILED,
    log_scale: bool = True,
) -> list[ProfileCurve]:
    """Fraction of problems each solver solves within a factor tau of the best.

    On the log scale fraction(tau) = |{p : log2 r[p, s] <= tau}| / n_p and the
    grid must cover [0, log2 r_max]; on the linear scale it must cover [1, r_max].
    """
    values = ratios.to_numpy(dtype=np.float64)
    top = np.log2(r_max) if log_scale else r_max
    low = 0.0 if log_scale else 1.0
    measure = np.log2(values) if log_scale else values
    if tau_grid is None:
        grid = np.unique(np.concatenate([np.linspace(low, top, 101), measure.ravel()]))
    else:
        grid = np.asarray(sorted(tau_grid), dtype=np.float64)
        if grid.size == 0 or grid[0] > low or grid[-1] < top * (1 - 1e-12):
            raise ValueError(f"tau grid must cover [{low}, {top}]")
    n_problems = values.shape[0]
    curves = []
    for col, solver in enumerate(ratios.columns):
        column = measure[:, col]
        fractions = [(column <= tau + 1e-12).sum() / n_problems for tau in grid]
        success = float((values[:, col] < r_max).sum() / n_problems)
        curves.append(ProfileCurve(str(solver), list(zip(grid.tolist(), fractions)), success))
    return curves


def profiles_frame(curves: Sequence[ProfileCurve]) -> pd.DataFrame:
    """Wide table: tau column plus one fraction column per solver."""
    if not curves:
        return pd.DataFrame(columns=["tau"])
    frame = pd.DataFrame({"tau": [t for t, _ in curves[0].points]})
    for curve in curves:
        frame[curve.solver_name] = [f for _, f in curve.points]
    return frame
