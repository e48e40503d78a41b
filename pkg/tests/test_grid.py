import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandmin import ConfigError, Grid, discrete_integral, interpolate, make_uniform_grid
from bandmin.oracle import gaussian_pdf


def test_reference_grid_dimensions():
    grid = make_uniform_grid(-5, 5, 0.01)
    assert grid.size == 1001
    assert np.all(grid.masses == 0.01)
    assert grid.points[0] == -5.0
    assert grid.points[-1] == 5.0


def test_three_point_grid():
    grid = make_uniform_grid(0, 1, 0.5)
    assert np.allclose(grid.points, [0.0, 0.5, 1.0])
    assert np.allclose(grid.masses, [0.5, 0.5, 0.5])
    assert grid.step == 0.5


def test_non_divisible_step_rejected():
    with pytest.raises(ConfigError):
        make_uniform_grid(0, 1, 0.3)


def test_bad_interval_and_step_rejected():
    with pytest.raises(ConfigError):
        make_uniform_grid(1, 0, 0.1)
    with pytest.raises(ConfigError):
        make_uniform_grid(0, 1, -0.1)
    with pytest.raises(ConfigError):
        make_uniform_grid(0, 1, 0.0)


def test_divisibility_snaps_float_remainders():
    # 0.1 is not exactly representable; the snap must still give 11 points.
    grid = make_uniform_grid(0, 1, 0.1)
    assert grid.size == 11


def test_grid_validation():
    with pytest.raises(ConfigError):
        Grid(points=np.array([0.0, 0.0, 1.0]), masses=np.ones(3))
    with pytest.raises(ConfigError):
        Grid(points=np.array([0.0, 1.0]), masses=np.array([1.0, 0.0]))
    with pytest.raises(ConfigError):
        Grid(points=np.array([0.0]), masses=np.array([1.0]))


def test_grid_is_immutable():
    grid = make_uniform_grid(0, 1, 0.5)
    with pytest.raises(ValueError):
        grid.points[0] = 3.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=30))
def test_interpolation_reproduces_weights_at_nodes(weights):
    grid = make_uniform_grid(0, len(weights) - 1, 1.0)
    values = interpolate(weights, grid, grid.points)
    assert np.array_equal(values, np.asarray(weights, dtype=float))


def test_interpolation_midpoint_and_support():
    grid = make_uniform_grid(0, 1, 1.0)
    assert interpolate([0.0, 2.0], grid, 0.5) == 1.0
    assert interpolate([3.0, 2.0], grid, 2.0) == 0.0
    assert interpolate([3.0, 2.0], grid, -0.5) == 0.0


def test_interpolate_checks_length():
    grid = make_uniform_grid(0, 1, 0.5)
    with pytest.raises(ConfigError):
        interpolate([1.0, 2.0], grid, 0.3)


def test_discrete_integral_constant():
    grid = make_uniform_grid(-5, 5, 0.01)
    assert discrete_integral(np.ones(grid.size), grid) == pytest.approx(10.01, abs=1e-12)
    assert discrete_integral(np.zeros(grid.size), grid) == 0.0


def test_discrete_integral_gaussian_mass():
    # Oracle: the closed form for the Gaussian integral over [-5, 5].
    grid = make_uniform_grid(-5, 5, 0.01)
    total = discrete_integral(gaussian_pdf(grid.points), grid)
    exact = math.erf(5 / math.sqrt(2))
    assert abs(total - exact) < 1e-7
    assert abs(total - 1.0) < 1e-4


def test_discrete_integral_linear():
    grid = make_uniform_grid(0, 1, 0.25)
    rng = np.random.default_rng(7)
    u = rng.standard_normal(grid.size)
    v = rng.standard_normal(grid.size)
    lhs = discrete_integral(2.5 * u - 1.5 * v, grid)
    rhs = 2.5 * discrete_integral(u, grid) - 1.5 * discrete_integral(v, grid)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_integral_of_interpolated_weights_is_mass_weighted_sum():
    grid = make_uniform_grid(0, 2, 0.5)
    rng = np.random.default_rng(3)
    weights = rng.random(grid.size)
    sampled = interpolate(weights, grid, grid.points)
    assert discrete_integral(sampled, grid) == pytest.approx(
        float(np.sum(weights * grid.masses)), abs=1e-15
    )
