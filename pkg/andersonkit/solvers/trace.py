from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..constants import RunStatus


@dataclass
class IterationRecord:
    iteration: int
    residual_norm: float
    was_anderson_step: bool = False
    reduced_dimension_s: Optional[int] = None
    rollback_flag: bool = False
    wall_time: float = 0.0


@dataclass
class IterationTrace:
    """Per-iteration history of one solve.

    Indices increase strictly except where a rollback re-records an earlier
    index with rollback_flag set.
    """

    records: List[IterationRecord] = field(default_factory=list)
    status: RunStatus = RunStatus.MAX_ITER
    initial_residual_norm: float = math.nan
    timers: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    rollbacks: int = 0

    def record(self, iteration: int, residual_norm: float, **kwargs) -> IterationRecord:
        rec = IterationRecord(iteration=iteration, residual_norm=float(residual_norm), **kwargs)
        self.records.append(rec)
        return rec

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    @property
    def residual_norms(self) -> np.ndarray:
        return np.array([r.residual_norm for r in self.records])

    def anderson_residual_norms(self) -> np.ndarray:
        """||r^k|| at iterations that took an Anderson step, rollbacks excluded."""
        return np.array([r.residual_norm for r in self.records if r.was_anderson_step and not r.rollback_flag])

    @property
    def final_relative_residual(self) -> float:
        if not self.records:
            return math.nan
        if self.initial_residual_norm == 0.0:
            return 0.0
        return self.records[-1].residual_norm / self.initial_residual_norm

    def timer(self, name: str) -> float:
        return self.timers.get(name, 0.0)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "iteration": [r.iteration for r in self.records],
                "residual_norm": [r.residual_norm for r in self.records],
                "was_anderson_step": [r.was_anderson_step for r in self.records],
                "reduced_dimension_s": pd.array([r.reduced_dimension_s for r in self.records], dtype="Int64"),
                "rollback_flag": [r.rollback_flag for r in self.records],
                "wall_time_s": [r.wall_time for r in self.records],
            }
        )
        frame.insert(2, "relative_residual", frame["residual_norm"] / self.initial_residual_norm if self.initial_residual_norm else 0.0)
        return frame
