import numpy as np
import pytest

from andersonkit.errors import ConfigError, StagnationError
from andersonkit.experiments import perturb
from andersonkit.experiments.perturb import (
    NoiseSchedule,
    backward_error_delta,
    diag_testcase,
    epsilon_k,
    perturbed_ls_solve,
    run_noise_sweep,
    verify_bounds,
)
from andersonkit.linalg.dense import least_squares_solve
from andersonkit.solvers import aar_solve, linear_problem


def test_diag_testcase_entries():
    A, b = diag_testcase()
    dense = A.to_dense()
    assert dense[0, 0] == 1e-4
    assert dense[99, 99] == 100.0
    assert np.count_nonzero(dense - np.diag(np.diag(dense))) == 0
    np.testing.assert_array_equal(b, A.csr @ np.ones(100))


def test_epsilon_k():
    assert epsilon_k(1.0, 100, 1.0, 1.0, 1.0) == pytest.approx(0.01)
    assert epsilon_k(1e-8, 1, 2.0, 0.5, 4.0) == pytest.approx(1e-8)
    with pytest.raises(StagnationError):
        epsilon_k(1.0, 100, 1.0, 0.0, 1.0)


def test_noise_schedule_validation():
    assert NoiseSchedule(0.0).epsilon == 0.0
    with pytest.raises(ConfigError):
        NoiseSchedule(-1e-3)
    with pytest.raises(ConfigError):
        NoiseSchedule(1e-3, k_star=0)


def test_perturbed_solve_without_noise_is_exact(rng):
    R = rng.standard_normal((30, 4))
    r = rng.standard_normal(30)
    g, E = perturbed_ls_solve(R, r, 0.0, np.random.default_rng(1))
    np.testing.assert_array_equal(g, least_squares_solve(R, r))
    assert not np.any(E)


def test_perturbed_solve_is_reproducible(rng):
    R = rng.standard_normal((30, 4))
    r = rng.standard_normal(30)
    g1, E1 = perturbed_ls_solve(R, r, 1e-3, np.random.default_rng(9))
    g2, E2 = perturbed_ls_solve(R, r, 1e-3, np.random.default_rng(9))
    np.testing.assert_array_equal(g1, g2)
    np.testing.assert_array_equal(E1, E2)
    assert np.linalg.norm(E1, 2) == pytest.approx(1e-3 * np.linalg.norm(R, 2))


def test_perturbed_solve_is_optimal_for_perturbed_matrix(rng):
    R = rng.standard_normal((100, 3))
    r = rng.standard_normal(100)
    g, E = perturbed_ls_solve(R, r, 0.1, np.random.default_rng(3))
    M = R + E
    best = np.linalg.norm(M @ g - r)
    probes = g + rng.standard_normal((10_000, 3))
    probe_norms = np.linalg.norm(probes @ M.T - r, axis=1)
    assert np.all(best <= probe_norms + 1e-12)


def test_backward_error_delta(rng):
    E = rng.standard_normal((50, 3))
    g = rng.standard_normal(3)
    assert backward_error_delta(E, np.zeros(3)) == 0.0
    assert backward_error_delta(np.zeros((50, 3)), g) == 0.0
    assert backward_error_delta(E, g) == pytest.approx(np.linalg.norm(E @ g), rel=1e-14)


def test_zero_epsilon_sweep_is_the_baseline():
    report = run_noise_sweep([0.0])
    assert report.epsilons == [0.0]
    A, b = diag_testcase()
    _, plain = aar_solve(linear_problem(A, b), perturb.noise_lab_config())
    np.testing.assert_array_equal(report.traces[0.0].residual_norms, plain.residual_norms)


def test_sweep_adds_baseline_and_converges():
    report = run_noise_sweep([1e-8, 1e-8, 1e-6], seed=0)
    assert report.epsilons == [0.0, 1e-8, 1e-6]
    for eps in report.epsilons:
        trace = report.traces[eps]
        assert trace.converged
        assert trace.final_relative_residual <= 1e-8
        assert report.iterations(eps) <= 500
    frame = report.to_frame()
    assert list(frame.columns) == ["epsilon", "iteration", "residual_norm", "epsilon_k", "delta_k", "sigma_min"]
    assert set(frame["epsilon"]) == {0.0, 1e-8, 1e-6}
    baseline = frame[frame["epsilon"] == 0.0]
    assert (baseline["epsilon_k"].dropna() == 0.0).all()
    noisy = frame[frame["epsilon"] == 1e-6]["epsilon_k"].dropna()
    assert (noisy > 0).any()


def test_sweep_is_deterministic_and_parallel_safe():
    a = run_noise_sweep([1e-4], seed=7).to_frame()
    b = run_noise_sweep([1e-4], seed=7, jobs=2).to_frame()
    assert a.equals(b)


def test_sweep_entries_draw_from_their_own_streams():
    assert NoiseSchedule(1e-4, index=2).stream_purpose == "noise/2"
    alone = run_noise_sweep([1e-2], seed=3)
    shifted = run_noise_sweep([1e-3, 1e-2], seed=3)
    first = alone.traces[1e-2].residual_norms
    second = shifted.traces[1e-2].residual_norms
    assert len(first) != len(second) or not np.array_equal(first, second)


def test_median_iterations_grow_with_noise_level():
    levels = [1e-8, 1e-6, 1e-4, 1.0]
    counts = {eps: [] for eps in levels}
    for seed in range(10):
        report = run_noise_sweep(levels, seed=seed)
        for eps in levels:
            assert report.traces[eps].converged
            assert report.traces[eps].final_relative_residual <= 1e-8
            assert report.iterations(eps) <= 500
            counts[eps].append(report.iterations(eps))
    medians = [np.median(counts[eps]) for eps in levels]
    assert all(lo <= hi for lo, hi in zip(medians, medians[1:]))


def test_sweep_rejects_empty():
    with pytest.raises(ValueError):
        run_noise_sweep([])


def test_bound_checks_hold():
    frame = verify_bounds(trials=100, seed=3)
    assert len(frame) == 300
    assert set(frame["kind"]) == {"matrix", "matrix_rhs", "residual"}
    assert frame["holds"].all()
    assert (frame["measured"] >= 0).all()
