from __future__ import annotations

from collections import deque
from typing import Optional

import numpy as np


class AndersonHistory:
    """FIFO window of iterate and residual differences (columns of X_k, R_k).

    Column i pairs x^i - x^(i-1) with r^i - r^(i-1); alongside it keeps
    ||r^i|| and ||x^i - x^(i-1)|| for the accuracy controller.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("history capacity must be >= 1")
        self.capacity = capacity
        self.x_diffs: deque[np.ndarray] = deque(maxlen=capacity)
        self.r_diffs: deque[np.ndarray] = deque(maxlen=capacity)
        self.r_norms: deque[float] = deque(maxlen=capacity)
        self.dx_norms: deque[float] = deque(maxlen=capacity)
        self.iterations: deque[int] = deque(maxlen=capacity)
        self.previous_x: Optional[np.ndarray] = None
        self.previous_r: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.x_diffs)

    def push(self, x: np.ndarray, r: np.ndarray, iteration: int = 0) -> None:
        if self.previous_x is not None:
            dx = x - self.previous_x
            self.x_diffs.append(dx)
            self.r_diffs.append(r - self.previous_r)
            self.r_norms.append(float(np.linalg.norm(r)))
            self.dx_norms.append(float(np.linalg.norm(dx)))
            self.iterations.append(iteration)
        self.previous_x = x
        self.previous_r = r

    def x_matrix(self) -> np.ndarray:
        return np.column_stack(self.x_diffs)

    def r_matrix(self) -> np.ndarray:
        return np.column_stack(self.r_diffs)

    def copy(self) -> "AndersonHistory":
        # stored vectors are never modified in place, so sharing them is safe
        out = AndersonHistory(self.capacity)
        out.x_diffs.extend(self.x_diffs)
        out.r_diffs.extend(self.r_diffs)
        out.r_norms.extend(self.r_norms)
        out.dx_norms.extend(self.dx_norms)
        out.iterations.extend(self.iterations)
        out.previous_x = self.previous_x
        out.previous_r = self.previous_r
        return out
