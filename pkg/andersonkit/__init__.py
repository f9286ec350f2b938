"""Anderson acceleration for fixed-point problems, with reduced least-squares variants."""

__version__ = "0.1.0"

__all__ = [
    "cli",
    "config",
    "experiments",
    "linalg",
    "precond",
    "reduced",
    "solvers",
]
