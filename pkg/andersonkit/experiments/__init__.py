from .bench import BenchSettings, ManifestEntry, discover_problems, parse_manifest, run_benchmark
from .boltzmann import (
    BoltzmannSettings,
    DistributionState,
    KineticGrid,
    SyntheticKernels,
    boltzmann_g,
    boltzmann_problem,
    build_grid,
    run_boltzmann_suite,
    synthetic_kernels,
)
from .perturb import (
    BackwardErrorReport,
    NoiseSchedule,
    backward_error_delta,
    residual_bound_trial,
    diag_testcase,
    epsilon_k,
    perturbed_ls_solve,
    run_noise_sweep,
    matrix_bound_trial,
    matrix_rhs_bound_trial,
    verify_bounds,
)
from .profiles import BenchRecord, ProfileCurve, performance_ratios, profile_curves, profiles_frame, records_frame
from .runner import SolverSettings, run_named_solver

__all__ = [
    "BackwardErrorReport",
    "BenchRecord",
    "BenchSettings",
    "BoltzmannSettings",
    "DistributionState",
    "KineticGrid",
    "ManifestEntry",
    "NoiseSchedule",
    "ProfileCurve",
    "SolverSettings",
    "SyntheticKernels",
    "backward_error_delta",
    "boltzmann_g",
    "boltzmann_problem",
    "build_grid",
    "residual_bound_trial",
    "diag_testcase",
    "discover_problems",
    "epsilon_k",
    "parse_manifest",
    "perturbed_ls_solve",
    "performance_ratios",
    "profile_curves",
    "profiles_frame",
    "records_frame",
    "run_benchmark",
    "run_boltzmann_suite",
    "run_named_solver",
    "run_noise_sweep",
    "synthetic_kernels",
    "matrix_bound_trial",
    "matrix_rhs_bound_trial",
    "verify_bounds",
]
