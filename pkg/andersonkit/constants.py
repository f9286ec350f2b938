"""
Enumerations and default parameters for andersonkit
"""

from enum import Enum


class SolverMode(Enum):
    """Fixed-point solver variants"""
    PICARD = "picard"
    AA = "aa"
    ALTERNATING_AA = "alternating_aa"
    REDUCED_ALTERNATING_AA = "reduced_alternating_aa"


class ProjectionStrategy(Enum):
    """Row selection for the Anderson least-squares"""
    NONE = "none"
    SUBSELECT = "subselect"
    RANDOMIZED = "randomized"


class PreconditionerKind(Enum):
    NONE = "none"
    ILU0 = "ilu0"
    ILUT = "ilut"


class RunStatus(Enum):
    """Final status of a solve"""
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    BREAKDOWN = "breakdown"


# Solver names used by the experiment harnesses
GMRES = "gmres"
PICARD = "picard"
AA = "aa"
ALTERNATING_AA = "alternating_aa"
SUBSELECTED = "subselected"
RANDOMIZED = "randomized"

BENCH_SOLVERS = (GMRES, ALTERNATING_AA, SUBSELECTED, RANDOMIZED)
BOLTZMANN_SOLVERS = (PICARD, AA, ALTERNATING_AA, SUBSELECTED, RANDOMIZED)

# Least-squares rank truncation relative to |t[0,0]|
RANK_TOL = 1e-14

# Performance-ratio value assigned to failed runs
RATIO_FAILED = 10_000.0

MATRIX_DIR_ENV = "ANDERSONKIT_MATRIX_DIR"

DEFAULTS = {
    "seed": 0,
    "solve": {
        "mode": "alternating_aa",
        "omega": 0.2,
        "p": 3,
        "m": 20,
        "tol": 1.0e-8,
        "max_iter": 10_000,
        "rhs": "from-ones",
    },
    "reduced": {
        "projection": "none",
        "batch_frac": 0.1,
        "gamma0": 1.0,
        "gamma_shrink": 0.5,
        "epsilon": 1.0e-8,
        "k_star": None,
    },
    "precond": {
        "kind": "none",
        "tau": 1.0e-4,
        "rcm": False,
        "diagscale": False,
    },
    "gmres": {
        "restart": 50,
        "max_iter": None,
    },
    "perturb": {
        "eps": [1.0e-8, 1.0e-6, 1.0e-4, 1.0],
        "k_star": 100,
        "omega": 1.0,
        "tol": 1.0e-8,
        "max_iter": 500,
    },
    "bench": {
        "solvers": list(BENCH_SOLVERS),
        "precond": "ilu0",
        "repeats": 1,
        "timing": True,
        "epsilon": 1.0e-4,
        "max_iter": None,
        "matrix_dir": None,
    },
    "boltzmann": {
        "densities": [1.0, 6.309573444801933, 39.81071705534972, 251.18864315095797, 1584.8931924611134, 10_000.0],
        "solvers": list(BOLTZMANN_SOLVERS),
        "n_angles": 110,
        "n_energies": 64,
        "e_min": 0.1,
        "e_max": 300.0,
        "dt": 1.0,
        "omega": 1.0,
        "batch_frac": 0.1,
        "m": 3,
        "p": 3,
        "tol": 1.0e-10,
        "max_iter": 20_000,
        "epsilon": 1.0e-8,
        "repeats": 30,
    },
    "jobs": 1,
}
