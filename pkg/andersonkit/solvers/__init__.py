from .anderson import SolveConfig, aar_solve, anderson_mixing, anderson_split_step, richardson_step
from .gmres import gmres_solve
from .history import AndersonHistory
from .problem import FixedPointProblem, linear_problem
from .trace import IterationRecord, IterationTrace

__all__ = [
    "AndersonHistory",
    "FixedPointProblem",
    "IterationRecord",
    "IterationTrace",
    "SolveConfig",
    "aar_solve",
    "anderson_mixing",
    "anderson_split_step",
    "gmres_solve",
    "linear_problem",
    "richardson_step",
]
