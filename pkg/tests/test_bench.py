import math

import numpy as np
import pandas as pd
import pytest

from andersonkit.constants import RATIO_FAILED
from andersonkit.experiments.bench import (
    BenchSettings,
    ManifestEntry,
    default_manifest,
    discover_problems,
    parse_manifest,
    run_benchmark,
)
from andersonkit.experiments.profiles import (
    BenchRecord,
    performance_ratios,
    profile_curves,
    profiles_frame,
    records_frame,
)
from andersonkit.experiments.runner import SolverSettings

from .conftest import write_mtx


def _rec(problem, solver, t, ok=True):
    return BenchRecord(problem, solver, t, ok, 10, 1e-9 if ok else 1.0)


def test_single_converged_solver_has_unit_ratio():
    ratios = performance_ratios([_rec("p", "a", 3.0)])
    assert ratios.loc["p", "a"] == 1.0


def test_ratios_direct_formula():
    ratios = performance_ratios([_rec("p", "a", 2.0), _rec("p", "b", 4.0)])
    assert ratios.loc["p"].tolist() == [1.0, 2.0]


def test_failed_entry_gets_ratio_cap():
    ratios = performance_ratios([_rec("p", "a", 2.0), _rec("p", "b", 1.0, ok=False), _rec("p", "c", 3.0)])
    assert ratios.loc["p"].tolist() == [1.0, RATIO_FAILED, 1.5]


def test_problem_without_success_is_capped_everywhere():
    ratios = performance_ratios(
        [_rec("p", "a", 2.0, ok=False), _rec("p", "b", 1.0, ok=False), _rec("q", "a", 1.0), _rec("q", "b", 5.0)]
    )
    assert ratios.loc["p"].tolist() == [RATIO_FAILED, RATIO_FAILED]
    assert ratios.loc["q"].tolist() == [1.0, 5.0]
    assert list(ratios.index) == ["p", "q"] and list(ratios.columns) == ["a", "b"]


@pytest.mark.parametrize(
    "records",
    [
        [],
        [_rec("p", "a", 1.0), _rec("p", "a", 2.0)],
        [_rec("p", "a", 1.0), _rec("p", "b", 2.0), _rec("q", "a", 1.0)],
    ],
)
def test_ratio_input_validation(records):
    with pytest.raises(ValueError):
        performance_ratios(records)


def test_profile_fastest_and_failing_solvers():
    ratios = pd.DataFrame({"fast": [1.0, 1.0], "dead": [RATIO_FAILED, RATIO_FAILED]}, index=["p", "q"])
    fast, dead = profile_curves(ratios)
    assert fast.points[0] == (0.0, 1.0)
    assert fast.success_probability == 1.0
    top = math.log2(RATIO_FAILED)
    assert all(frac == 0.0 for tau, frac in dead.points if tau < top)
    assert dead.points[-1][1] == 1.0
    assert dead.success_probability == 0.0


def test_profile_hand_enumeration():
    ratios = pd.DataFrame({"a": [1.0, 2.0, 1.0], "b": [4.0, 1.0, RATIO_FAILED]}, index=["p1", "p2", "p3"])
    top = math.log2(RATIO_FAILED)
    a, b = profile_curves(ratios, tau_grid=[0.0, 1.0, 2.0, top])
    assert [f for _, f in a.points] == pytest.approx([2 / 3, 1.0, 1.0, 1.0])
    assert [f for _, f in b.points] == pytest.approx([1 / 3, 1 / 3, 2 / 3, 1.0])
    assert a.success_probability == 1.0
    assert b.success_probability == pytest.approx(2 / 3)


def test_profile_linear_scale_and_grid_coverage():
    ratios = pd.DataFrame({"a": [1.0, 3.0]}, index=["p", "q"])
    (curve,) = profile_curves(ratios, tau_grid=[1.0, 2.0, 3.0, RATIO_FAILED], log_scale=False)
    assert [f for _, f in curve.points] == [0.5, 0.5, 1.0, 1.0]
    with pytest.raises(ValueError):
        profile_curves(ratios, tau_grid=[0.0, 1.0])


def test_profile_curves_are_monotone():
    rng = np.random.default_rng(0)
    values = 1.0 + rng.random((20, 3)) * 50
    values[rng.random((20, 3)) < 0.2] = RATIO_FAILED
    ratios = pd.DataFrame(values, columns=["x", "y", "z"])
    for curve in profile_curves(ratios):
        fractions = [f for _, f in curve.points]
        assert all(0.0 <= f <= 1.0 for f in fractions)
        assert all(a <= b for a, b in zip(fractions, fractions[1:]))


def test_profiles_frame_layout():
    ratios = pd.DataFrame({"a": [1.0], "b": [2.0]}, index=["p"])
    frame = profiles_frame(profile_curves(ratios, tau_grid=[0.0, 1.0, math.log2(RATIO_FAILED)]))
    assert list(frame.columns) == ["tau", "a", "b"]
    assert frame["b"].tolist() == [0.0, 1.0, 1.0]


def test_parse_manifest(tmp_path):
    path = tmp_path / "manifest.txt"
    path.write_text("# name rcm diagscale\nalpha yes no\n\nbeta no YES\n", encoding="utf-8")
    assert parse_manifest(path) == [ManifestEntry("alpha", True, False), ManifestEntry("beta", False, True)]


@pytest.mark.parametrize("text", ["alpha maybe no\n", "alpha yes no\nalpha no no\n"])
def test_parse_manifest_errors(tmp_path, text):
    path = tmp_path / "manifest.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ValueError):
        parse_manifest(path)


def test_default_manifest_flags():
    entries = {e.name: e for e in default_manifest()}
    assert entries["sherman3"].rcm and not entries["sherman3"].diagscale
    assert entries["xenon1"].rcm and entries["xenon1"].diagscale
    assert not entries["memplus"].rcm


def test_discover_orders_by_manifest_then_extras(tmp_path):
    for name in ("zeta", "alpha", "extra"):
        write_mtx(tmp_path / f"{name}.mtx", np.eye(3))
    (tmp_path / "manifest.txt").write_text("zeta yes no\nalpha no yes\n", encoding="utf-8")
    found = discover_problems(tmp_path)
    assert [e.name for e, _ in found] == ["zeta", "alpha", "extra"]
    assert found[0][0].rcm and found[1][0].diagscale
    assert found[2][0] == ManifestEntry("extra")


def test_discover_rejects_empty_or_missing(tmp_path):
    with pytest.raises(ValueError):
        discover_problems(tmp_path)
    with pytest.raises(ValueError):
        discover_problems(tmp_path / "nope")


def test_run_benchmark_on_identity(tmp_path):
    write_mtx(tmp_path / "eye.mtx", np.eye(6))
    settings = BenchSettings(solver=SolverSettings(omega=1.0, epsilon=1e-4))
    records = run_benchmark(tmp_path, ["alternating_aa", "gmres", "subselected"], settings)
    assert [r.solver_name for r in records] == ["alternating_aa", "gmres", "subselected"]
    for r in records:
        assert r.converged and r.iterations <= 2
        assert r.status == "converged"
        assert r.total_time_s >= r.wall_time_s >= r.wall_time_min_s >= 0
    frame = records_frame(records)
    assert (performance_ratios(frame).loc["eye"] >= 1.0).all()


def test_run_benchmark_marks_unreadable_matrix_failed(tmp_path):
    write_mtx(tmp_path / "good.mtx", 2.0 * np.eye(4))
    (tmp_path / "bad.mtx").write_text("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n", encoding="ascii")
    settings = BenchSettings(solver=SolverSettings(omega=0.5), precond="ilut", repeats=2)
    records = run_benchmark(tmp_path, ["gmres", "alternating_aa"], settings)
    bad = [r for r in records if r.problem_name == "bad"]
    assert len(bad) == 2 and not any(r.converged for r in bad)
    assert all(r.status == "error" and "line 1" in r.note for r in bad)
    ratios = performance_ratios(records)
    assert ratios.loc["bad"].tolist() == [RATIO_FAILED, RATIO_FAILED]


def test_run_benchmark_rejects_unknown_solver(tmp_path):
    write_mtx(tmp_path / "eye.mtx", np.eye(2))
    with pytest.raises(ValueError, match="bogus"):
        run_benchmark(tmp_path, ["bogus"])


def test_bench_settings_validation():
    with pytest.raises(ValueError):
        BenchSettings(repeats=0)
    with pytest.raises(ValueError):
        BenchSettings(precond="cholesky")
