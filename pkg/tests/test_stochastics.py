import math

import numpy as np
import pytest

from prodcredit.stochastics import (
    DiffusionSpec,
    EstimationError,
    JumpSpec,
    PathBundle,
    ProcessModel,
    SampleLaw,
    SimulationError,
    TimeGrid,
    derive_seed,
    estimate,
    simulate_diffusion,
    simulate_jump_diffusion,
    summarize,
)


def test_time_grid_covering_and_lookup():
    grid = TimeGrid.covering(2.0, 10)
    assert grid.n_steps == 20
    assert grid.step == pytest.approx(0.1)
    assert grid.index_of(0.5) == 5
    with pytest.raises(ValueError):
        grid.index_of(0.55)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 4)


def test_constant_process_stays_put():
    bundle = simulate_diffusion(DiffusionSpec.constant(1.0), TimeGrid(0.0, 1.0, 10), 50, seed=3)
    assert np.all(bundle.values == 1.0)


def test_gbm_terminal_mean_matches_lognormal():
    spec = DiffusionSpec.gbm(1.0, 0.05, 0.2)
    bundle = simulate_diffusion(spec, TimeGrid(0.0, 1.0, 100), 100_000, seed=11)
    est = estimate(bundle, lambda path: path[-1])
    assert abs(est.mean - math.exp(0.05)) <= 3 * est.std_error


def test_same_seed_same_bundle():
    spec = DiffusionSpec.gbm(1.0, 0.05, 0.2)
    grid = TimeGrid(0.0, 1.0, 20)
    first = simulate_diffusion(spec, grid, 500, seed=7)
    second = simulate_diffusion(spec, grid, 500, seed=7)
    assert np.array_equal(first.values, second.values)


def test_paths_are_prefix_stable_and_thread_independent():
    spec = DiffusionSpec.gbm(1.0, 0.0, 0.3)
    grid = TimeGrid(0.0, 1.0, 16)
    small = simulate_diffusion(spec, grid, 100, seed=5)
    large = simulate_diffusion(spec, grid, 3000, seed=5)
    threaded = simulate_diffusion(spec, grid, 3000, seed=5, threads=4)
    assert np.array_equal(small.values, large.values[:100])
    assert np.array_equal(large.values, threaded.values)


def test_zero_volatility_follows_the_ode():
    spec = DiffusionSpec(x0=1.0, drift=lambda t, x: -x, volatility=lambda t, x: 0.0, name="decay")
    grid = TimeGrid(0.0, 1.0, 200)
    bundle = simulate_diffusion(spec, grid, 1, seed=0)
    assert abs(bundle.terminal[0] - math.exp(-1.0)) <= grid.step


def test_non_finite_drift_names_the_point():
    spec = DiffusionSpec(x0=0.0, drift=lambda t, x: 1.0 / x, volatility=lambda t, x: 0.0, name="bad")
    with pytest.raises(SimulationError) as exc:
        simulate_diffusion(spec, TimeGrid(0.0, 1.0, 4), 2, seed=0)
    assert exc.value.t == 0.0
    assert exc.value.x == 0.0


def test_zero_intensity_matches_plain_diffusion():
    spec = DiffusionSpec.gbm(1.0, 0.02, 0.1)
    grid = TimeGrid(0.0, 1.0, 20)
    plain = simulate_diffusion(spec, grid, 200, seed=9)
    jumped = simulate_jump_diffusion(spec, JumpSpec(0.0, SampleLaw.point(1.0)), grid, 200, seed=9)
    assert np.array_equal(plain.values, jumped.values)


def test_poisson_count_mean():
    spec = DiffusionSpec.constant(0.0)
    grid = TimeGrid(0.0, 1.0, 50)
    raw = simulate_jump_diffusion(spec, JumpSpec(2.0, SampleLaw.point(1.0)), grid, 20_000, seed=1)
    est = summarize(raw.terminal)
    assert abs(est.mean - 2.0) <= 3 * est.std_error

    compensated = simulate_jump_diffusion(
        spec, JumpSpec(2.0, SampleLaw.point(1.0), compensated=True), grid, 100_000, seed=1
    )
    est = summarize(compensated.terminal)
    assert abs(est.mean) <= 3 * est.std_error


def test_estimate_constant_functional_has_no_error():
    bundle = simulate_diffusion(DiffusionSpec.gbm(1.0, 0.0, 0.2), TimeGrid(0.0, 1.0, 4), 64, seed=2)
    est = estimate(bundle, lambda path: 4.5)
    assert est.mean == 4.5
    assert est.std_error == 0.0
    assert est.n_samples == 64


def test_estimate_rejects_empty_and_non_finite():
    grid = TimeGrid(0.0, 1.0, 2)
    empty = PathBundle(grid, 0, np.zeros((0, 3)), seed=0)
    with pytest.raises(EstimationError):
        estimate(empty, lambda path: 1.0)

    bundle = simulate_diffusion(DiffusionSpec.constant(1.0), grid, 5, seed=0)
    calls = iter(range(5))
    with pytest.raises(EstimationError) as exc:
        estimate(bundle, lambda path: float('nan') if next(calls) == 3 else 1.0)
    assert exc.value.path_index == 3


def test_standard_error_scales_with_path_count():
    spec = DiffusionSpec.gbm(1.0, 0.0, 0.2)
    grid = TimeGrid(0.0, 1.0, 10)
    small = estimate(simulate_diffusion(spec, grid, 10_000, seed=4), lambda p: p[-1])
    large = estimate(simulate_diffusion(spec, grid, 20_000, seed=4), lambda p: p[-1])
    assert large.std_error / small.std_error == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_union_estimate_is_weighted_mean():
    spec = DiffusionSpec.gbm(1.0, 0.0, 0.2)
    grid = TimeGrid(0.0, 1.0, 8)
    left = simulate_diffusion(spec, grid, 300, seed=1)
    right = simulate_diffusion(spec, grid, 700, seed=2)
    joint = estimate(left.union(right), lambda p: p[-1])
    weighted = (300 * estimate(left, lambda p: p[-1]).mean + 700 * estimate(right, lambda p: p[-1]).mean) / 1000
    assert joint.mean == pytest.approx(weighted, rel=1e-12)
    assert joint.n_samples == 1000


def test_cumulative_process_integrates_the_rate():
    model = ProcessModel(DiffusionSpec.constant(3.0), cumulative=True)
    bundle = model.simulate(TimeGrid(0.0, 2.0, 8), 2, seed=0)
    assert bundle.terminal == pytest.approx([6.0, 6.0])


def test_sample_law_expectations():
    law = SampleLaw.normal(0.5, 2.0)
    second_moment, bound = law.expect(lambda x: x**2)
    assert second_moment == pytest.approx(4.25, rel=1e-9)
    assert bound < 1e-8

    value, bound = SampleLaw.point(3.0).expect(lambda x: 2 * x)
    assert value == 6.0
    assert bound == 0.0

    empirical = SampleLaw.empirical([1.0, 2.0, 3.0, 4.0])
    mean, bound = empirical.expect(lambda x: x)
    assert mean == 2.5
    assert bound > 0


def test_derived_seeds_differ_by_label():
    assert derive_seed(1, 'a') != derive_seed(1, 'b')
    assert derive_seed(1, 'a') == derive_seed(1, 'a')
    assert 0 <= derive_seed(2**64 - 1, 'x') < 2**64
