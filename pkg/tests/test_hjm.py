import math

import numpy as np
import pandas as pd
import pytest

from prodcredit.hjm import (
    CoefficientError,
    DriftConditionError,
    ForwardSurface,
    InfeasibleDriftError,
    check_drift_condition,
    coefficient_family,
    custom_coefficients,
    discounted_bond_prices,
    drift_residual,
    evolve_surface,
    growth_family,
    growth_model_step,
    ho_lee,
    ho_lee_jump,
    implied_diffusion_from_growth,
    jump_kernel,
    jump_term,
    run_growth_model,
    transforms,
    triangle_mask,
    zero_coefficients,
)
from prodcredit.sovereign import GrowthSurface
from prodcredit.stochastics import TimeGrid


def test_transforms_of_constant_fields():
    grid = TimeGrid(0.0, 1.0, 10)
    coeffs = coefficient_family('zero').shifted(0.3)
    tr = transforms(ho_lee(0.02), grid)
    t, T = np.meshgrid(grid.points, grid.points, indexing='ij')
    mask = triangle_mask(grid)
    assert np.allclose(tr.S[0][mask], -0.02 * (T - t)[mask], atol=1e-15)
    assert np.allclose(tr.half_s_squared[mask], 0.5 * 0.02**2 * ((T - t) ** 2)[mask], atol=1e-15)
    shifted = transforms(coeffs, grid)
    assert np.allclose(shifted.A[mask], -0.3 * (T - t)[mask], atol=1e-14)


def test_transforms_vanish_on_the_diagonal():
    grid = TimeGrid(0.0, 1.0, 8)
    tr = transforms(ho_lee_jump(0.01, 0.5, 0.01, 0.02), grid, marks=[-1.0, 0.5, 2.0])
    assert np.all(np.diagonal(tr.A) == 0.0)
    assert np.all(np.diagonal(tr.S, axis1=1, axis2=2) == 0.0)
    assert np.all(np.diagonal(tr.D, axis1=1, axis2=2) == 0.0)
    assert np.all(np.isnan(tr.A[~triangle_mask(grid)]))


@pytest.mark.parametrize('sigma0', [0.005, 0.01, 0.02])
@pytest.mark.parametrize('steps', [10, 37, 100])
def test_ho_lee_satisfies_the_drift_condition(sigma0, steps):
    report = drift_residual(ho_lee(sigma0), TimeGrid(0.0, 1.0, steps))
    assert report.max_abs <= 1e-10
    assert report.passed
    assert check_drift_condition(report) is report


def test_perturbed_drift_is_detected():
    grid = TimeGrid(0.0, 1.0, 50)
    report = drift_residual(ho_lee(0.01).shifted(1e-4), grid)
    assert report.max_abs >= 5e-5
    assert report.max_abs >= 1e-4 * grid.step
    assert not report.passed
    with pytest.raises(DriftConditionError) as exc:
        check_drift_condition(report)
    assert exc.value.exit_code == 5


def test_missing_drift_leaves_half_s_squared():
    grid = TimeGrid(0.0, 2.0, 20)
    coeffs = ho_lee(0.01)
    without_drift = type(coeffs)(name='no_drift', alpha=lambda t, T: 0.0, sigma=lambda t, T: 0.01)
    report = drift_residual(without_drift, grid)
    assert report.max_abs == pytest.approx(0.5 * 0.01**2 * 2.0**2, rel=1e-12)
    assert report.argmax == (0.0, 2.0)


def test_empty_condition_has_zero_residual():
    report = drift_residual(zero_coefficients(), TimeGrid(0.0, 1.0, 5))
    assert report.max_abs == 0.0
    rows = report.rows()
    assert list(rows.columns) == ['t', 'T', 'residual']
    assert len(rows) == 21


def test_jump_drift_condition_holds_at_default_tolerance():
    report = drift_residual(ho_lee_jump(0.01, 0.5, 0.01, 0.02), TimeGrid(0.0, 1.0, 50))
    assert report.passed
    assert report.max_abs > report.tolerance
    assert 0 < report.grid_error <= report.quadrature_bound
    assert report.summary()['grid_error'] == report.grid_error
    assert np.all(report.jump_integral >= 0)
    assert report.integrability['int_jump_sq'] > 0


def test_shifted_jump_drift_is_still_rejected():
    report = drift_residual(ho_lee_jump(0.01, 0.5, 0.01, 0.02).shifted(1e-4), TimeGrid(0.0, 1.0, 50))
    assert not report.passed
    assert report.max_abs >= 5e-5
    assert report.quadrature_bound < 1e-8


def test_grid_error_vanishes_for_polynomial_coefficients():
    report = drift_residual(ho_lee(0.01), TimeGrid(0.0, 2.0, 40))
    assert report.grid_error == pytest.approx(0.0, abs=1e-15)


def test_jump_term_agrees_with_monte_carlo():
    grid = TimeGrid(0.0, 1.0, 10)
    coeffs = ho_lee_jump(0.01, 0.5, 0.05, 0.3)
    field, bound = jump_term(coeffs, grid)
    rng = np.random.default_rng(12)
    marks = rng.normal(0.05, 0.3, 200_000)
    # delta(t, x, T) = x, so D(0, x, T*) = -x
    samples = 0.5 * jump_kernel(-marks)
    mc_mean = samples.mean()
    mc_error = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(field[0, -1] - mc_mean) <= bound + 4 * mc_error


def test_jump_kernel_is_never_negative():
    rng = np.random.default_rng(0)
    d = np.concatenate([rng.uniform(-50, 50, 5000), rng.normal(0, 1e-6, 5000)])
    assert np.all(jump_kernel(d) >= 0)
    assert jump_kernel(0.0) == 0.0


def test_non_finite_coefficient_names_the_point():
    bad = type(ho_lee(0.01))(name='bad', alpha=lambda t, T: 1.0 / (T - 0.5), sigma=lambda t, T: 0.0)
    with pytest.raises(CoefficientError) as exc:
        bad.drift_field(TimeGrid(0.0, 1.0, 4))
    assert exc.value.maturity == 0.5


def test_zero_coefficients_keep_the_surface():
    grid = TimeGrid(0.0, 1.0, 10)
    initial = 0.02 + 0.01 * grid.points
    ensemble = evolve_surface(zero_coefficients(), grid, initial, 50, seed=1)
    for k, step in enumerate(ensemble.observe_steps):
        assert np.all(ensemble.surfaces[:, k, step:] == initial[step:])


def test_evolution_starts_from_a_forward_surface():
    grid = TimeGrid(0.0, 1.0, 10)
    s_axis = np.linspace(0.0, 2.0, 201)
    growth = GrowthSurface.linear(0.02, 0.01, np.array([0.0, 2.0]), s_axis)
    surface = ForwardSurface.from_growth(growth, grid)
    from_surface = evolve_surface(ho_lee(0.01), grid, surface, 200, seed=3)
    from_curve = evolve_surface(ho_lee(0.01), grid, surface.initial_curve, 200, seed=3)
    assert np.array_equal(from_surface.surfaces, from_curve.surfaces, equal_nan=True)
    assert np.allclose(from_surface.surfaces[:, 0, :], 0.02 + 0.01 * grid.points)
    flat = evolve_surface(zero_coefficients(), grid, ForwardSurface.flat(grid, 0.03), 20, seed=3)
    assert np.all(flat.short_rate == 0.03)


def test_initial_surface_must_share_the_grid():
    grid = TimeGrid(0.0, 1.0, 10)
    with pytest.raises(CoefficientError, match='different grid'):
        evolve_surface(ho_lee(0.01), grid, ForwardSurface.flat(TimeGrid(0.0, 1.0, 20), 0.02), 10, seed=0)


def test_ho_lee_mean_surface_follows_the_drift():
    sigma0 = 0.01
    grid = TimeGrid(0.0, 1.0, 20)
    initial = np.full(grid.n_steps + 1, 0.03)
    ensemble = evolve_surface(ho_lee(sigma0), grid, initial, 20_000, seed=4, observe_times=[0.5, 1.0])
    frame = ensemble.mean_surface()
    for row in frame.itertuples():
        expected = 0.03 + sigma0**2 * (row.t * row.T - row.t**2 / 2)
        # Euler sums the drift at left points
        bias = sigma0**2 * row.t * grid.step
        assert abs(row.mean - expected) <= 3 * row.std_error + bias


def test_discounted_bonds_are_martingales():
    grid = TimeGrid(0.0, 1.0, 20)
    initial = np.full(grid.n_steps + 1, 0.02)
    ensemble = evolve_surface(ho_lee(0.01), grid, initial, 10_000, seed=6, observe_times=[0.0, 0.25, 0.5, 1.0])
    prices = discounted_bond_prices(ensemble, 1.0)
    start = prices[0][1].mean
    assert start == pytest.approx(math.exp(-0.02), rel=1e-12)
    for t, est in prices[1:]:
        assert abs(est.mean - start) <= 3 * est.std_error + 1e-5


def test_evolution_is_thread_count_independent():
    grid = TimeGrid(0.0, 1.0, 10)
    initial = np.full(grid.n_steps + 1, 0.02)
    coeffs = ho_lee_jump(0.01, 1.0, 0.0, 0.01)
    one = evolve_surface(coeffs, grid, initial, 3000, seed=2, threads=1)
    four = evolve_surface(coeffs, grid, initial, 3000, seed=2, threads=4)
    assert np.array_equal(one.surfaces, four.surfaces, equal_nan=True)
    assert np.array_equal(one.short_rate, four.short_rate)


def test_implied_diffusion_round_trips_ho_lee():
    sigma0 = 0.02
    grid = TimeGrid(0.0, 1.0, 25)
    t, T = np.meshgrid(grid.points, grid.points, indexing='ij')
    mask = triangle_mask(grid)
    half_sq = implied_diffusion_from_growth(-sigma0**2 * (T - t), grid)
    assert np.allclose(half_sq[mask], 0.5 * sigma0**2 * ((T - t) ** 2)[mask], atol=1e-9)


def test_implied_diffusion_feasibility():
    grid = TimeGrid(0.0, 1.0, 10)
    n = grid.n_steps + 1
    t, T = np.meshgrid(grid.points, grid.points, indexing='ij')
    mask = triangle_mask(grid)
    feasible = implied_diffusion_from_growth(np.full((n, n), -0.3), grid)
    assert np.allclose(feasible[mask], 0.3 * (T - t)[mask])
    assert np.all(implied_diffusion_from_growth(np.zeros((n, n)), grid)[mask] == 0.0)
    with pytest.raises(InfeasibleDriftError) as exc:
        implied_diffusion_from_growth(np.full((n, n), 0.3), grid)
    assert len(exc.value.region) == n * (n - 1) // 2
    assert exc.value.exit_code == 6


def test_growth_model_steps():
    maturities = np.linspace(0.0, 1.0, 5)
    alpha = np.full(5, 0.2)
    assert np.array_equal(growth_model_step(growth_family('zero'), alpha, 0.0, maturities, 0.1), alpha)
    stepped = growth_model_step(growth_family('constant', rate=0.5), alpha, 0.0, maturities, 0.1)
    assert np.allclose(stepped, 0.25)
    with pytest.raises(CoefficientError):
        growth_model_step(lambda t, T, a: a / 0.0, alpha, 0.0, maturities, 0.1)


def test_mean_reversion_decays_exponentially():
    grid = TimeGrid(0.0, 1.0, 1000)
    field = run_growth_model(growth_family('mean_reversion', speed=2.0), np.full(1001, 0.1), grid)
    assert field[-1, -1] == pytest.approx(0.1 * math.exp(-2.0), abs=0.1 * 2.0**2 * grid.step)


def test_constant_growth_accumulates_linearly():
    grid = TimeGrid(0.0, 2.0, 40)
    field = run_growth_model(growth_family('constant', rate=0.05), np.zeros(41), grid)
    assert field[-1, -1] == pytest.approx(0.1)


def test_forward_surface_from_growth():
    axis = np.linspace(0.0, 1.0, 11)
    growth = GrowthSurface.linear(0.01, 0.002, axis, axis)
    surface = ForwardSurface.from_growth(growth, TimeGrid(0.0, 1.0, 10))
    assert surface.initial_curve == pytest.approx(0.01 + 0.002 * np.linspace(0.0, 1.0, 11))
    assert surface.short_rate == pytest.approx(np.full(11, 0.01))
    assert np.isnan(surface.values[1, 0])


def test_custom_coefficients_interpolate_table():
    t, T = np.meshgrid([0.0, 1.0], [0.0, 1.0], indexing='ij')
    frame = pd.DataFrame({
        't': t.ravel(),
        'T': T.ravel(),
        'alpha': (0.01**2 * (T - t)).ravel(),
        'sigma': np.full(4, 0.01),
    })
    coeffs = custom_coefficients(frame)
    report = drift_residual(coeffs, TimeGrid(0.0, 1.0, 10))
    assert report.max_abs <= 1e-10
