from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..constants import ProjectionStrategy
from ..errors import ConfigError


@dataclass
class ProjectionPlan:
    """Row-selection settings for the reduced Anderson least-squares.

    `s_current` is the floor of the reduced dimension for this solve. It only
    grows (on rollback); a single Anderson step may temporarily use more rows.
    """

    strategy: ProjectionStrategy
    n: int
    s_current: int
    batch_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        self.strategy = ProjectionStrategy(self.strategy)
        if self.n < 1:
            raise ConfigError("n", f"must be >= 1, got {self.n}")
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ConfigError("batch_frac", f"must be in (0, 1], got {self.batch_fraction}")
        if not 1 <= self.s_current <= self.n:
            raise ConfigError("s_current", f"must be in [1, {self.n}], got {self.s_current}")

    @classmethod
    def initial(cls, strategy, n: int, batch_fraction: float = 0.1, seed: int = 0) -> "ProjectionPlan":
        """Start at one batch: s = ceil(batch_fraction * n)."""
        s = min(n, max(1, math.ceil(batch_fraction * n)))
        return cls(strategy=strategy, n=n, s_current=s, batch_fraction=batch_fraction, seed=seed)

    @property
    def batch_size(self) -> int:
        return max(1, math.ceil(self.batch_fraction * self.n))

    @property
    def active(self) -> bool:
        return self.strategy is not ProjectionStrategy.NONE

    def grown(self, s: int) -> int:
        return min(self.n, s + self.batch_size)


def select_rows_subselect(r, s: int) -> np.ndarray:
    """Indices of the s largest |r_j| (ties to the lower index), ascending."""
    v = np.abs(np.asarray(r, dtype=np.float64))
    if not 1 <= s <= v.size:
        raise ValueError(f"s must be in [1, {v.size}], got {s}")
    if s == v.size:
        return np.arange(v.size)
    top = np.argsort(-v, kind="stable")[:s]
    return np.sort(top)


def select_rows_random(n: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """s distinct indices drawn uniformly without replacement, ascending."""
    if not 1 <= s <= n:
        raise ValueError(f"s must be in [1, {n}], got {s}")
    if s == n:
        return np.arange(n)
    return np.sort(rng.choice(n, size=s, replace=False))


def select_rows(plan: ProjectionPlan, r: np.ndarray, s: int, rng: np.random.Generator) -> np.ndarray:
    if plan.strategy is ProjectionStrategy.SUBSELECT:
        return select_rows_subselect(r, s)
    if plan.strategy is ProjectionStrategy.RANDOMIZED:
        return select_rows_random(r.size, s, rng)
    return np.arange(r.size)


def project_ls(R_k, r_k, rows) -> tuple[np.ndarray, np.ndarray, float]:
    """Restrict the least-squares problem to `rows`.

    Returns (R_k[rows], r_k[rows], ||r_k on the unselected rows||_2).
    """
    R = np.asarray(R_k, dtype=np.float64)
    r = np.asarray(r_k, dtype=np.float64)
    idx = np.asarray(rows, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty row selection")
    if idx.min() < 0 or idx.max() >= r.size:
        raise ValueError("row index out of range")
    if np.unique(idx).size != idx.size:
        raise ValueError("row selection contains duplicates")
    if idx.size == r.size:
        return R[idx], r[idx], 0.0
    unselected = np.ones(r.size, dtype=bool)
    unselected[idx] = False
    return R[idx], r[idx], float(np.linalg.norm(r[unselected]))
