import math
from dataclasses import replace

import numpy as np
import pytest

from andersonkit.experiments.boltzmann import (
    SUITE_COLUMNS,
    AdmissibilityMonitor,
    BoltzmannSettings,
    DistributionState,
    SyntheticKernels,
    boltzmann_g,
    boltzmann_problem,
    build_grid,
    initial_distribution,
    run_boltzmann_suite,
    synthetic_kernels,
)
from andersonkit.experiments.runner import SolverSettings, run_named_solver


def test_default_grid_size():
    grid = build_grid()
    assert grid.dimension == 7040
    assert grid.energy_nodes[0] == pytest.approx(0.1)
    assert grid.energy_nodes[-1] == pytest.approx(300.0)
    assert grid.quadrature_weights.sum() == pytest.approx(1.0)


def test_single_energy_grid():
    grid = build_grid(n_angles=4, n_energies=1, e_max=42.0)
    np.testing.assert_array_equal(grid.energy_nodes, [42.0])


@pytest.mark.parametrize("kwargs", [{"n_angles": 0}, {"e_max": 0.0}, {"e_min": 500.0}])
def test_grid_validation(kwargs):
    with pytest.raises(ValueError):
        build_grid(**kwargs)


def test_zero_kernels_carry_over(rng):
    f_n = rng.random(12)
    zero = SyntheticKernels(0.0, lambda f: np.zeros_like(f), lambda f: np.zeros_like(f))
    np.testing.assert_array_equal(boltzmann_g(DistributionState(rng.random(12), f_n), zero), f_n)


def test_constant_kernels_closed_form(rng):
    f_n = rng.random(8)
    c1, c2, dt = 0.3, 2.0, 0.5
    kernels = SyntheticKernels(1.0, lambda f: np.full_like(f, c1), lambda f: np.full_like(f, c2))
    expected = (f_n + dt * c1) / (1.0 + dt * c2)
    out = boltzmann_g(DistributionState(rng.random(8), f_n, dt), kernels)
    np.testing.assert_allclose(out, expected, rtol=1e-15)


def test_negative_opacity_rejected():
    kernels = SyntheticKernels(1.0, lambda f: np.zeros_like(f), lambda f: -np.ones_like(f))
    with pytest.raises(ValueError):
        boltzmann_g(DistributionState(np.zeros(3), np.zeros(3)), kernels)


def test_state_validation():
    with pytest.raises(ValueError):
        DistributionState(np.zeros(3), np.zeros(3), dt=0.0)
    with pytest.raises(ValueError):
        DistributionState(np.zeros(3), np.zeros(4))
    assert not DistributionState(np.array([0.5, 1.2]), np.zeros(2)).admissible()


def test_synthetic_kernels_match_straight_line_formula(rng):
    grid = build_grid(n_angles=5, n_energies=7)
    d = 3.0
    f = rng.random(grid.dimension)
    f_n = initial_distribution(grid)
    table = f.reshape(5, 7)
    out = boltzmann_g(DistributionState(f, f_n), synthetic_kernels(d, grid))
    for a in range(5):
        for e in range(7):
            energy = grid.energy_nodes[e]
            avg = sum(grid.quadrature_weights[b] * table[b, e] for b in range(5))
            kappa = 1.0 / (1.0 + energy / 10.0)
            sigma = 0.5 * math.exp(-energy / 50.0)
            eta = d * kappa * avg + d * sigma
            chi = d * kappa * (1.0 + avg)
            expected = (f_n[a * 7 + e] + eta) / (1.0 + chi)
            assert out[a * 7 + e] == pytest.approx(expected, rel=1e-14)


def test_vanishing_density_is_carry_over():
    grid = build_grid(n_angles=4, n_energies=6)
    f_n = initial_distribution(grid)
    problem = boltzmann_problem(synthetic_kernels(1e-14, grid), f_n)
    np.testing.assert_allclose(problem.evaluate_g(np.full(grid.dimension, 0.3)), f_n, atol=1e-13)
    settings = SolverSettings(omega=1.0, tol=1e-10, max_iter=50)
    _, trace = run_named_solver("picard", problem, settings, x0=f_n)
    assert trace.converged and trace.iterations <= 1


def test_isotropic_input_gives_angle_independent_emission():
    grid = build_grid(n_angles=6, n_energies=5)
    kernels = synthetic_kernels(10.0, grid)
    eta = grid.as_table(kernels.eta_total(initial_distribution(grid)))
    np.testing.assert_allclose(eta, np.broadcast_to(eta[0], eta.shape), rtol=0, atol=0)


def test_high_density_map_contracts():
    grid = build_grid(n_angles=8, n_energies=12)
    problem = boltzmann_problem(synthetic_kernels(1e4, grid), initial_distribution(grid))
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(100):
        f, g = rng.random(grid.dimension), rng.random(grid.dimension)
        ratios.append(np.linalg.norm(problem.evaluate_g(f) - problem.evaluate_g(g)) / np.linalg.norm(f - g))
    assert max(ratios) < 1.0


def test_monitor_counts_without_clipping():
    monitor = AdmissibilityMonitor()
    monitor.check(np.array([0.2, 0.7]))
    monitor.check(np.array([-0.1, 1.3]))
    assert monitor.violations == 1
    assert monitor.worst == pytest.approx(0.3)


def _small_settings(**solver):
    base = dict(omega=1.0, p=3, m=3, tol=1e-10, max_iter=20_000, epsilon=1e-8)
    base.update(solver)
    return BoltzmannSettings(solver=SolverSettings(**base), n_angles=4, n_energies=8, repeats=1)


def test_suite_acceleration_across_densities():
    densities = list(np.logspace(0.0, 4.0, 6))
    settings = replace(_small_settings(), n_angles=16, n_energies=16)
    frame = run_boltzmann_suite(densities, ["picard", "alternating_aa", "randomized"], settings)
    assert list(frame.columns) == SUITE_COLUMNS
    assert frame["converged"].all()
    picard = frame[frame["solver"] == "picard"].sort_values("density")["mean_iterations"].to_numpy()
    assert np.all(np.diff(picard) > 0)
    stiffest = frame[frame["density"] == densities[-1]].set_index("solver")["mean_iterations"]
    assert stiffest["alternating_aa"] <= 0.5 * stiffest["picard"]
    assert stiffest["randomized"] <= 0.5 * stiffest["picard"]
    assert abs(stiffest["randomized"] - stiffest["alternating_aa"]) <= 0.2 * stiffest["alternating_aa"]
    assert (frame["max_abs_diff_vs_picard"] < 1e-8).all()
    assert (frame[frame["solver"] == "picard"]["max_abs_diff_vs_picard"] == 0.0).all()


def test_suite_solvers_agree():
    frame = run_boltzmann_suite([1.0, 100.0], ["picard", "aa", "alternating_aa", "subselected", "randomized"], _small_settings())
    assert len(frame) == 10
    assert frame["converged"].all()
    assert (frame["max_abs_diff_vs_picard"] < 1e-8).all()
    assert (frame["admissibility_violations"] >= 0).all()


def test_suite_without_picard_has_no_reference():
    frame = run_boltzmann_suite([1.0], ["alternating_aa"], _small_settings())
    assert math.isnan(frame["max_abs_diff_vs_picard"].iloc[0])


def test_suite_validation():
    with pytest.raises(ValueError):
        run_boltzmann_suite([], ["picard"], _small_settings())
    with pytest.raises(ValueError):
        run_boltzmann_suite([1.0], ["picard"], BoltzmannSettings(repeats=0))
