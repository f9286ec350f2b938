from .controller import (
    Action,
    AdaptiveController,
    BoundWitness,
    Decision,
    StepResult,
    bound_surrogate,
    controller_step,
    heuristic_bound,
)
from .projection import ProjectionPlan, project_ls, select_rows, select_rows_random, select_rows_subselect

__all__ = [
    "Action",
    "AdaptiveController",
    "BoundWitness",
    "Decision",
    "ProjectionPlan",
    "StepResult",
    "bound_surrogate",
    "controller_step",
    "heuristic_bound",
    "project_ls",
    "select_rows",
    "select_rows_random",
    "select_rows_subselect",
]
