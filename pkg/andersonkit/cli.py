import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import Config, resolve_config
from .constants import GMRES, PreconditionerKind, ProjectionStrategy, RunStatus, SolverMode
from .errors import AndersonKitError, ConfigError
from .logging_utils import setup_logging
from .utils.csvio import write_csv


log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2

# flag attribute -> dotted config key, per command
_FLAG_KEYS: Dict[str, Dict[str, str]] = {
    "solve": {
        "mode": "solve.mode",
        "omega": "solve.omega",
        "p": "solve.p",
        "m": "solve.m",
        "tol": "solve.tol",
        "max_iter": "solve.max_iter",
        "rhs": "solve.rhs",
        "projection": "reduced.projection",
        "batch_frac": "reduced.batch_frac",
        "gamma0": "reduced.gamma0",
        "gamma_shrink": "reduced.gamma_shrink",
        "epsilon": "reduced.epsilon",
        "k_star": "reduced.k_star",
        "precond": "precond.kind",
        "tau": "precond.tau",
        "rcm": "precond.rcm",
        "diagscale": "precond.diagscale",
        "restart": "gmres.restart",
        "seed": "seed",
    },
    "perturb": {
        "eps": "perturb.eps",
        "k_star": "perturb.k_star",
        "omega": "perturb.omega",
        "tol": "perturb.tol",
        "max_iter": "perturb.max_iter",
        "seed": "seed",
        "jobs": "jobs",
    },
    "bench": {
        "matrix_dir": "bench.matrix_dir",
        "solvers": "bench.solvers",
        "precond": "bench.precond",
        "repeats": "bench.repeats",
        "timing": "bench.timing",
        "epsilon": "bench.epsilon",
        "max_iter": "bench.max_iter",
        "omega": "solve.omega",
        "p": "solve.p",
        "m": "solve.m",
        "tol": "solve.tol",
        "batch_frac": "reduced.batch_frac",
        "gamma0": "reduced.gamma0",
        "gamma_shrink": "reduced.gamma_shrink",
        "k_star": "reduced.k_star",
        "tau": "precond.tau",
        "restart": "gmres.restart",
        "seed": "seed",
        "jobs": "jobs",
    },
    "boltzmann": {
        "densities": "boltzmann.densities",
        "solvers": "boltzmann.solvers",
        "repeats": "boltzmann.repeats",
        "omega": "boltzmann.omega",
        "p": "boltzmann.p",
        "m": "boltzmann.m",
        "tol": "boltzmann.tol",
        "max_iter": "boltzmann.max_iter",
        "batch_frac": "boltzmann.batch_frac",
        "epsilon": "boltzmann.epsilon",
        "dt": "boltzmann.dt",
        "seed": "seed",
        "jobs": "jobs",
    },
    "verify": {
        "seed": "seed",
    },
}

# config sections echoed into each command's CSV header
_SECTIONS = {
    "solve": ("seed", "solve", "reduced", "precond", "gmres"),
    "perturb": ("seed", "jobs", "perturb"),
    "bench": ("seed", "jobs", "bench", "solve", "reduced", "precond", "gmres"),
    "boltzmann": ("seed", "jobs", "boltzmann"),
    "verify": ("seed",),
}


@dataclass
class RunConfig:
    """Effective configuration of one command invocation."""

    command: str
    config: Config
    out: Path

    def header(self, *extra: Tuple[str, Any]) -> List[Tuple[str, Any]]:
        sections = _SECTIONS[self.command]
        rows: List[Tuple[str, Any]] = [("command", self.command)]
        rows += [(k, v) for k, v in self.config.flatten() if k.split(".", 1)[0] in sections]
        return rows + list(extra)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    cfg = Config()
    for attr, key in _FLAG_KEYS[args.cmd].items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg.set(key, value)
    return cfg.raw


def _common(p: argparse.ArgumentParser, out_default: str) -> None:
    p.add_argument("--config", type=Path, help="YAML or key=value config file")
    p.add_argument("--out", type=Path, default=Path(out_default), help=f"Output CSV (default {out_default})")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    p.add_argument("--log-dir", help="Also log to <dir>/latest.log")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega", type=float, help="Richardson relaxation")
    p.add_argument("--p", type=int, help="Iterations between Anderson steps")
    p.add_argument("--m", type=int, help="History length")
    p.add_argument("--tol", type=float, help="Relative residual tolerance")
    p.add_argument("--max-iter", type=int)


def _reduced_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--batch-frac", type=float, help="Reduced dimension granularity as a fraction of n")
    p.add_argument("--gamma0", type=float)
    p.add_argument("--gamma-shrink", type=float)
    p.add_argument("--epsilon", type=float, help="Accuracy target of the reduced least-squares")
    p.add_argument("--k-star", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="andersonkit", description="Anderson acceleration solvers and experiments")
    sub = parser.add_subparsers(dest="cmd", required=True)

    # Single solve
    p_solve = sub.add_parser("solve", help="Solve A x = b from a Matrix Market file")
    p_solve.add_argument("matrix", type=Path)
    _common(p_solve, "trace.csv")
    _solver_flags(p_solve)
    _reduced_flags(p_solve)
    p_solve.add_argument("--mode", choices=[m.value for m in SolverMode] + [GMRES])
    p_solve.add_argument("--projection", choices=[s.value for s in ProjectionStrategy])
    p_solve.add_argument("--precond", choices=[k.value for k in PreconditionerKind])
    p_solve.add_argument("--tau", type=float, help="ILUT drop tolerance")
    p_solve.add_argument("--rcm", action="store_true", default=None, help="Reverse Cuthill-McKee before factoring")
    p_solve.add_argument("--diagscale", action="store_true", default=None, help="Diagonal scaling before factoring")
    p_solve.add_argument("--restart", type=int, help="GMRES restart length")
    p_solve.add_argument("--rhs", help="from-ones (b = A*ones), ones, or a text file with one value per line")

    # Noise injection on the diagonal test case
    p_pert = sub.add_parser("perturb", help="Perturbed least-squares sweep on diag(1e-4, 2, ..., 100)")
    _common(p_pert, "noise.csv")
    p_pert.add_argument("--eps", type=float, nargs="+")
    p_pert.add_argument("--k-star", type=int)
    p_pert.add_argument("--omega", type=float)
    p_pert.add_argument("--tol", type=float)
    p_pert.add_argument("--max-iter", type=int)
    p_pert.add_argument("--jobs", type=int)

    # Sparse benchmark
    p_bench = sub.add_parser("bench", help="Benchmark solvers on a directory of Matrix Market files")
    p_bench.add_argument("matrix_dir", nargs="?", type=Path, help="Defaults to $ANDERSONKIT_MATRIX_DIR")
    _common(p_bench, "bench.csv")
    _solver_flags(p_bench)
    _reduced_flags(p_bench)
    p_bench.add_argument("--solvers", nargs="+")
    p_bench.add_argument("--precond", choices=[PreconditionerKind.ILU0.value, PreconditionerKind.ILUT.value])
    p_bench.add_argument("--tau", type=float)
    p_bench.add_argument("--restart", type=int)
    p_bench.add_argument("--repeats", type=int)
    p_bench.add_argument("--no-timing", dest="timing", action="store_false", default=None, help="Allow parallel problems")
    p_bench.add_argument("--jobs", type=int)

    # Boltzmann suite
    p_boltz = sub.add_parser("boltzmann", help="Implicit collision-stage suite over matter densities")
    _common(p_boltz, "boltzmann.csv")
    _solver_flags(p_boltz)
    p_boltz.add_argument("--densities", type=float, nargs="+")
    p_boltz.add_argument("--solvers", nargs="+")
    p_boltz.add_argument("--repeats", type=int)
    p_boltz.add_argument("--batch-frac", type=float)
    p_boltz.add_argument("--epsilon", type=float)
    p_boltz.add_argument("--dt", type=float)
    p_boltz.add_argument("--jobs", type=int)

    # Bound checks
    p_ver = sub.add_parser("verify", help="Randomized checks of the backward-error bounds")
    _common(p_ver, "verify.csv")
    p_ver.add_argument("--trials", type=int, default=100)

    return parser


def _solver_settings(cfg: Config, section: str, epsilon_key: str, max_iter: Optional[int]):
    from .experiments.runner import SolverSettings

    return SolverSettings(
        omega=float(cfg.get(f"{section}.omega")),
        p=int(cfg.get(f"{section}.p")),
        m=int(cfg.get(f"{section}.m")),
        tol=float(cfg.get(f"{section}.tol")),
        max_iter=max_iter,
        batch_frac=float(cfg.get("reduced.batch_frac") if section == "solve" else cfg.get(f"{section}.batch_frac")),
        gamma0=float(cfg.get("reduced.gamma0")),
        gamma_shrink=float(cfg.get("reduced.gamma_shrink")),
        epsilon=float(cfg.get(epsilon_key)),
        k_star=cfg.get("reduced.k_star"),
    )


def _load_rhs(spec: str, A) -> np.ndarray:
    from .linalg.sparse import matvec

    if spec == "from-ones":
        return matvec(A, np.ones(A.n_cols))
    if spec == "ones":
        return np.ones(A.n_rows)
    path = Path(spec)
    if not path.exists():
        raise ConfigError("rhs", f"{spec}: expected from-ones, ones or an existing file")
    b = np.loadtxt(path, dtype=np.float64, ndmin=1)
    if b.shape != (A.n_rows,):
        raise ConfigError("rhs", f"{spec}: {b.size} values for a {A.n_rows}-row matrix")
    return b


def _reduced_parts(strategy: ProjectionStrategy, n: int, settings, seed: int):
    from .reduced.controller import AdaptiveController
    from .reduced.projection import ProjectionPlan

    if strategy is ProjectionStrategy.NONE:
        return None, None
    plan = ProjectionPlan.initial(strategy, n, settings.batch_frac, seed)
    controller = AdaptiveController.for_problem(
        n, settings.max_iter, settings.gamma0, settings.epsilon, settings.gamma_shrink, settings.k_star
    )
    return plan, controller


def _cmd_solve(run: RunConfig, args: argparse.Namespace) -> int:
    from .linalg.mmio import read_matrix_market
    from .precond.ilu import build_preconditioner
    from .solvers.anderson import SolveConfig, aar_solve
    from .solvers.gmres import gmres_solve
    from .solvers.problem import linear_problem

    cfg = run.config
    mode = str(cfg.get("solve.mode"))
    strategy = ProjectionStrategy(cfg.get("reduced.projection"))
    kind = PreconditionerKind(cfg.get("precond.kind"))
    seed = int(cfg.get("seed"))
    settings = _solver_settings(cfg, "solve", "reduced.epsilon", int(cfg.get("solve.max_iter")))
    if mode != GMRES:
        if strategy is not ProjectionStrategy.NONE and mode == SolverMode.ALTERNATING_AA.value:
            mode = SolverMode.REDUCED_ALTERNATING_AA.value
        config = SolveConfig(settings.omega, settings.p, settings.m, settings.tol, settings.max_iter, mode)
        if config.mode is SolverMode.REDUCED_ALTERNATING_AA and strategy is ProjectionStrategy.NONE:
            raise ConfigError("projection", "reduced_alternating_aa needs --projection subselect or randomized")
        # range checks before the matrix is read
        _reduced_parts(strategy, 1, settings, seed)

    A = read_matrix_market(args.matrix)
    if not A.is_square():
        raise ConfigError("matrix", f"square matrix required, got {A.n_rows}x{A.n_cols}")
    b = _load_rhs(str(cfg.get("solve.rhs")), A)
    P = build_preconditioner(
        A, kind, float(cfg.get("precond.tau")), rcm=bool(cfg.get("precond.rcm")), diagscale=bool(cfg.get("precond.diagscale"))
    )
    if mode == GMRES:
        restart = int(cfg.get("gmres.restart"))
        max_iter = cfg.get("gmres.max_iter") or settings.max_iter
        _, trace = gmres_solve(A, b, P, restart=restart, tol=settings.tol, max_iter=max_iter)
    else:
        plan, controller = _reduced_parts(strategy, A.n_rows, settings, seed)
        _, trace = aar_solve(linear_problem(A, b, P), config, plan=plan, controller=controller, seed=seed)

    write_csv(
        trace.to_frame(),
        run.out,
        run.header(("matrix", args.matrix.name), ("status", trace.status.value), ("rollbacks", trace.rollbacks)),
    )
    print(
        f"{args.matrix.name}: {mode} {trace.status.value} after {trace.iterations} iterations, "
        f"relative residual {trace.final_relative_residual:.3e} -> {run.out}"
    )
    return EXIT_OK if trace.status is RunStatus.CONVERGED else EXIT_NOT_CONVERGED


def _cmd_perturb(run: RunConfig, args: argparse.Namespace) -> int:
    from .experiments.perturb import noise_lab_config, run_noise_sweep

    cfg = run.config
    config = noise_lab_config(
        max_iter=int(cfg.get("perturb.max_iter")), tol=float(cfg.get("perturb.tol")), omega=float(cfg.get("perturb.omega"))
    )
    report = run_noise_sweep(
        [float(e) for e in cfg.get("perturb.eps")],
        config,
        seed=int(cfg.get("seed")),
        k_star=int(cfg.get("perturb.k_star")),
        jobs=int(cfg.get("jobs")),
    )
    write_csv(report.to_frame(), run.out, run.header())
    failed = [eps for eps, trace in report.traces.items() if not trace.converged]
    for eps in report.epsilons:
        print(f"eps={eps:g}: {report.traces[eps].status.value} after {report.iterations(eps)} iterations")
    return EXIT_NOT_CONVERGED if failed else EXIT_OK


def _cmd_bench(run: RunConfig, args: argparse.Namespace) -> int:
    from .experiments.bench import BenchSettings, run_benchmark
    from .experiments.profiles import performance_ratios, profile_curves, profiles_frame, records_frame

    cfg = run.config
    matrix_dir = cfg.get("bench.matrix_dir")
    if not matrix_dir:
        raise ConfigError("matrix_dir", "pass a directory or set ANDERSONKIT_MATRIX_DIR")
    max_iter = cfg.get("bench.max_iter")
    settings = BenchSettings(
        solver=_solver_settings(cfg, "solve", "bench.epsilon", int(max_iter) if max_iter is not None else None),
        precond=cfg.get("bench.precond"),
        tau=float(cfg.get("precond.tau")),
        restart=int(cfg.get("gmres.restart")),
        gmres_max_iter=cfg.get("gmres.max_iter"),
        repeats=int(cfg.get("bench.repeats")),
        timing=bool(cfg.get("bench.timing")),
        jobs=int(cfg.get("jobs")),
        seed=int(cfg.get("seed")),
    )
    records = run_benchmark(Path(matrix_dir), cfg.get("bench.solvers"), settings)
    frame = records_frame(records)
    profiles = profiles_frame(profile_curves(performance_ratios(frame)))
    extra = [("matrices", frame["problem_name"].nunique())]
    if settings.repeats == 1:
        extra.append(("note", "single run per solve; timings are noisy"))
    write_csv(frame, run.out, run.header(*extra))
    profiles_path = run.out.with_name(f"{run.out.stem}_profiles{run.out.suffix or '.csv'}")
    write_csv(profiles, profiles_path, run.header(*extra))
    n_problems = frame["problem_name"].nunique()
    for solver, count in frame.groupby("solver_name", sort=False)["converged"].sum().items():
        print(f"{solver}: {int(count)}/{n_problems} solved")
    print(f"records -> {run.out}, profiles -> {profiles_path}")
    return EXIT_OK


def _cmd_boltzmann(run: RunConfig, args: argparse.Namespace) -> int:
    from .experiments.boltzmann import BoltzmannSettings, run_boltzmann_suite
    from .experiments.runner import SolverSettings, build_solver

    cfg = run.config
    settings = BoltzmannSettings(
        solver=SolverSettings(
            omega=float(cfg.get("boltzmann.omega")),
            p=int(cfg.get("boltzmann.p")),
            m=int(cfg.get("boltzmann.m")),
            tol=float(cfg.get("boltzmann.tol")),
            max_iter=int(cfg.get("boltzmann.max_iter")),
            batch_frac=float(cfg.get("boltzmann.batch_frac")),
            gamma0=float(cfg.get("reduced.gamma0")),
            gamma_shrink=float(cfg.get("reduced.gamma_shrink")),
            epsilon=float(cfg.get("boltzmann.epsilon")),
            k_star=cfg.get("reduced.k_star"),
        ),
        n_angles=int(cfg.get("boltzmann.n_angles")),
        n_energies=int(cfg.get("boltzmann.n_energies")),
        e_min=float(cfg.get("boltzmann.e_min")),
        e_max=float(cfg.get("boltzmann.e_max")),
        dt=float(cfg.get("boltzmann.dt")),
        repeats=int(cfg.get("boltzmann.repeats")),
        jobs=int(cfg.get("jobs")),
        seed=int(cfg.get("seed")),
    )
    # reject unknown solver names and bad ranges before any work
    for solver in cfg.get("boltzmann.solvers"):
        build_solver(str(solver), settings.n_angles * settings.n_energies, settings.solver)

    table = run_boltzmann_suite([float(d) for d in cfg.get("boltzmann.densities")], cfg.get("boltzmann.solvers"), settings)
    extra = [("note", "single run per cell; timings are noisy")] if settings.repeats == 1 else []
    write_csv(table, run.out, run.header(*extra))
    print(table.to_string(index=False))
    return EXIT_OK if bool(table["converged"].all()) else EXIT_NOT_CONVERGED


def _cmd_verify(run: RunConfig, args: argparse.Namespace) -> int:
    from .experiments.perturb import verify_bounds

    if args.trials < 1:
        raise ConfigError("trials", f"must be >= 1, got {args.trials}")
    table = verify_bounds(args.trials, seed=int(run.config.get("seed")))
    write_csv(table, run.out, run.header(("trials", args.trials)))
    for kind, holds in table.groupby("kind", sort=False)["holds"]:
        print(f"{kind}: {int(holds.sum())}/{len(holds)} trials within bound")
    return EXIT_OK if bool(table["holds"].all()) else EXIT_NOT_CONVERGED


_COMMANDS = {
    "solve": _cmd_solve,
    "perturb": _cmd_perturb,
    "bench": _cmd_bench,
    "boltzmann": _cmd_boltzmann,
    "verify": _cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(logging.DEBUG if args.verbose else logging.INFO, log_dir=args.log_dir)

    try:
        cfg = resolve_config(args.config, _overrides(args))
        run = RunConfig(command=args.cmd, config=cfg, out=args.out)
        return _COMMANDS[args.cmd](run, args)
    except (AndersonKitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
