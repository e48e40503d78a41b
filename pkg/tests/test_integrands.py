import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandmin import (
    ConfigError,
    MinimaxDetectIntegrand,
    ProximalIntegrand,
    WeightedKLIntegrand,
    lambert_w0,
    make_uniform_grid,
    solve_monotone,
)


class TestLambertW:
    def test_anchor_values(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(np.e) == pytest.approx(1.0, abs=1e-15)
        # Independent oracle: mpmath's implementation.
        assert lambert_w0(1.0) == pytest.approx(0.5671432904, abs=1e-9)
        assert lambert_w0(1.0) == pytest.approx(float(mpmath.lambertw(1.0)), abs=1e-15)

    def test_round_trip_accuracy(self):
        rng = np.random.default_rng(0)
        z = 10.0 ** rng.uniform(-12, 12, size=1000)
        w = lambert_w0(z)
        assert np.all(np.abs(w * np.exp(w) - z) <= 1e-13 * np.maximum(1.0, z))

    def test_against_mpmath_on_grid(self):
        for z in [1e-9, 0.25, 2.0, 10.0, 1e4, 1e10]:
            assert lambert_w0(z) == pytest.approx(float(mpmath.lambertw(z)), rel=1e-14)

    def test_extremes(self):
        assert np.isinf(lambert_w0(np.inf))
        w = lambert_w0(1e300)
        assert w * math.exp(w) == pytest.approx(1e300, rel=1e-13)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            lambert_w0(-0.5)

    def test_array_shape(self):
        z = np.array([[0.0, 1.0], [np.e, 5.0]])
        assert lambert_w0(z).shape == (2, 2)


class TestWeightedKL:
    def test_invalid_weights(self):
        with pytest.raises(ConfigError):
            WeightedKLIntegrand([0.5, 0.4])
        with pytest.raises(ConfigError):
            WeightedKLIntegrand([1.2, -0.2])
        with pytest.raises(ConfigError):
            WeightedKLIntegrand([])

    def test_objective_values(self):
        half = WeightedKLIntegrand([0.5, 0.5])
        assert half.f(0.0, np.array([1.0, 1.0, 1.0])) == 0.0
        skew = WeightedKLIntegrand([0.7, 0.3])
        assert skew.f(0.0, np.array([1.0, 1.0, np.e])) == pytest.approx(np.e, rel=1e-15)

    def test_objective_boundary_conventions(self):
        integ = WeightedKLIntegrand([1.0])
        assert np.isposinf(integ.f(0.0, np.array([0.0, 1.0])))
        assert integ.f(0.0, np.array([1.0, 0.0])) == 0.0
        assert integ.f(0.0, np.array([0.0, 0.0])) == 0.0

    def test_subderivative_values(self):
        skew = WeightedKLIntegrand([0.7, 0.3])
        assert skew.fn(0, 0.0, np.array([1.0, 1.0, 2.0])) == pytest.approx(-1.4)
        assert skew.fn(2, 0.0, np.array([0.4, 0.4, 0.4])) == pytest.approx(1.0)
        assert np.isneginf(skew.fn(0, 0.0, np.array([0.0, 1.0, 1.0])))
        assert skew.fn(0, 0.0, np.array([0.0, 1.0, 0.0])) == 0.0

    def test_inverse_values(self):
        skew = WeightedKLIntegrand([0.7, 0.3])
        x = np.array([1.0, 1.0, 2.0])
        assert skew.inverse(0, 0.0, x, -1.4) == pytest.approx(1.0, rel=1e-15)
        assert np.isposinf(skew.inverse(0, 0.0, x, 0.5))
        half = WeightedKLIntegrand([0.5, 0.5])
        assert half.inverse(2, 0.0, np.array([1.0, 1.0, 0.0]), 1.0) == pytest.approx(1.0)

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(1)
        integ = WeightedKLIntegrand([0.6, 0.4])
        for _ in range(200):
            x = rng.uniform(0.05, 3.0, size=3)
            c = -rng.uniform(0.05, 5.0)
            x_new = x.copy()
            x_new[0] = integ.inverse(0, 0.0, x, c)
            assert integ.fn(0, 0.0, x_new) == pytest.approx(c, abs=1e-10)
            c_ref = rng.uniform(-3.0, 3.0)
            x_new = x.copy()
            x_new[2] = integ.inverse(2, 0.0, x, c_ref)
            assert integ.fn(2, 0.0, x_new) == pytest.approx(c_ref, abs=1e-10)

    def test_finite_difference_matches_subderivative(self):
        rng = np.random.default_rng(2)
        integ = WeightedKLIntegrand([0.25, 0.75])
        delta = 1e-6
        for _ in range(100):
            x = rng.uniform(0.2, 3.0, size=3)
            for n in range(3):
                hi = x.copy()
                hi[n] += delta
                lo = x.copy()
                lo[n] -= delta
                approx = (integ.f(0.0, hi) - integ.f(0.0, lo)) / (2 * delta)
                exact = integ.fn(n, 0.0, x)
                assert abs(approx - exact) <= max(1e-6, 1e-4 * abs(exact))

    def test_subderivatives_nondecreasing(self):
        rng = np.random.default_rng(3)
        integ = WeightedKLIntegrand([0.7, 0.3])
        x = rng.uniform(0.01, 5.0, size=(3, 1000))
        for n in range(3):
            lo = integ.fn(n, 0.0, x)
            hi_x = x.copy()
            hi_x[n] = hi_x[n] * 1.5 + 0.1
            hi = integ.fn(n, 0.0, hi_x)
            assert np.all(hi >= lo - 1e-12)


class TestMinimaxDetect:
    def test_cost_values(self):
        integ = MinimaxDetectIntegrand.cosexp()
        assert integ.r1(0.0) == pytest.approx(2.0)
        assert integ.r2(0.0) == pytest.approx(2.0)
        assert integ.r1(1.0) == pytest.approx(0.0, abs=1e-15)
        assert integ.r2(1.0) == pytest.approx(2 * math.exp(-1))

    def test_subgradient_cases(self):
        integ = MinimaxDetectIntegrand.cosexp()
        x = np.array([1.0, 2.0])
        assert integ.fn(0, 0.0, x) == pytest.approx(-2.0)
        assert integ.fn(1, 0.0, x) == 0.0
        # tie goes to the first density
        tie = np.array([1.0, 1.0])
        assert integ.fn(0, 0.0, tie) == pytest.approx(-2.0)
        assert integ.fn(1, 0.0, tie) == 0.0
        # zero first cost: both selections vanish
        assert integ.fn(0, 1.0, np.array([5.0, 1.0])) == pytest.approx(0.0, abs=1e-15)

    def test_objective(self):
        integ = MinimaxDetectIntegrand.cosexp()
        assert integ.f(0.0, np.array([1.0, 2.0])) == pytest.approx(-2.0)

    def test_infinite_density_with_zero_cost(self):
        integ = MinimaxDetectIntegrand.cosexp()
        out = integ.fn(0, 1.0, np.array([np.inf, 1.0]))
        assert np.isfinite(out)

    def test_subderivatives_nondecreasing(self):
        rng = np.random.default_rng(4)
        integ = MinimaxDetectIntegrand.cosexp()
        omega = rng.uniform(-5, 5, size=1000)
        x = rng.uniform(0.0, 2.0, size=(2, 1000))
        for n in range(2):
            lo = integ.fn(n, omega, x)
            hi_x = x.copy()
            hi_x[n] = hi_x[n] + 0.3
            hi = integ.fn(n, omega, hi_x)
            assert np.all(hi >= lo - 1e-12)

    def test_from_samples_interpolates(self):
        grid = make_uniform_grid(-1, 1, 0.5)
        integ = MinimaxDetectIntegrand.from_samples(
            np.abs(grid.points), np.ones(grid.size), grid
        )
        assert integ.r1(0.25) == pytest.approx(0.25)
        assert integ.r2(0.9) == pytest.approx(1.0)

    def test_from_samples_validation(self):
        grid = make_uniform_grid(-1, 1, 0.5)
        with pytest.raises(ConfigError):
            MinimaxDetectIntegrand.from_samples(-np.ones(grid.size), np.ones(grid.size), grid)
        with pytest.raises(ConfigError):
            MinimaxDetectIntegrand.from_samples(np.ones(3), np.ones(3), grid)

    def test_base_inverse_matches_bisection(self):
        integ = MinimaxDetectIntegrand.cosexp()
        rng = np.random.default_rng(5)
        for _ in range(100):
            omega = rng.uniform(-4.9, 4.9)
            x = rng.uniform(0.05, 1.5, size=2)
            c = rng.uniform(-3.0, 0.5)
            analytic = float(integ.inverse(0, omega, x, c))
            numeric = solve_monotone(
                lambda v: float(integ.fn(0, omega, np.array([v, x[1]]))),
                c, 0.0, 100.0, 1e-11,
            )
            if analytic >= 100.0 or np.isinf(analytic):
                assert numeric == 100.0
            else:
                assert analytic == pytest.approx(numeric, abs=1e-9)


class TestProximal:
    def test_anchor_fixed_point(self):
        grid = make_uniform_grid(0, 1, 0.5)

        class Flat(WeightedKLIntegrand):
            def fn(self, n, omega, x):
                return np.zeros_like(np.asarray(x, dtype=float)[n])

        base = Flat([1.0])
        anchors = np.full((2, 3), 0.3)
        prox = ProximalIntegrand(base, anchors, grid, rho=1.0)
        x = np.full((2, 3), 0.3)
        assert np.allclose(prox.fn(0, grid.points, x), 0.0)

    def test_zero_rho_reduces_to_base(self):
        grid = make_uniform_grid(0, 1, 0.5)
        base = WeightedKLIntegrand([0.5, 0.5])
        anchors = np.random.default_rng(6).random((3, 3))
        prox = ProximalIntegrand(base, anchors, grid, rho=0.0)
        x = np.random.default_rng(7).uniform(0.2, 2.0, size=(3, 3))
        for n in range(3):
            assert np.allclose(prox.fn(n, grid.points, x), base.fn(n, grid.points, x))

    def test_negative_rho_rejected(self):
        grid = make_uniform_grid(0, 1, 0.5)
        with pytest.raises(ConfigError):
            ProximalIntegrand(WeightedKLIntegrand([1.0]), np.ones((2, 3)), grid, rho=-1.0)

    def test_anchor_interpolation_off_grid(self):
        grid = make_uniform_grid(0, 1, 0.5)
        base = WeightedKLIntegrand([1.0])
        anchors = np.array([[0.0, 1.0, 0.0], [1.0, 1.0, 1.0]])
        prox = ProximalIntegrand(base, anchors, grid, rho=1.0)
        assert prox.anchor_at(0, 0.25) == pytest.approx(0.5)

    def test_strictly_increasing(self):
        grid = make_uniform_grid(-1, 1, 0.25)
        rng = np.random.default_rng(8)
        anchors = rng.random((2, grid.size))
        prox = ProximalIntegrand(MinimaxDetectIntegrand.cosexp(), anchors, grid, rho=1.0)
        x = rng.uniform(0.0, 2.0, size=(2, grid.size))
        for n in range(2):
            lo = prox.fn(n, grid.points, x)
            hi_x = x.copy()
            hi_x[n] = hi_x[n] + 1e-3
            hi = prox.fn(n, grid.points, hi_x)
            assert np.all(hi > lo)

    def test_kl_proximal_inverse_values(self):
        base = WeightedKLIntegrand([0.5, 0.5])
        grid = make_uniform_grid(0, 1, 0.5)
        anchors = np.zeros((3, 3))
        prox = ProximalIntegrand(base, anchors, grid, rho=1.0)
        # c + h = 0 and alpha * x_ref = 1  ->  sqrt(1)
        x = np.array([[1.0], [1.0], [2.0]])
        out = prox.inverse(0, grid.points[:1], x, 0.0)
        assert out[0] == pytest.approx(1.0, rel=1e-14)

    def test_kl_proximal_inverse_round_trip(self):
        rng = np.random.default_rng(9)
        base = WeightedKLIntegrand([0.3, 0.7])
        grid = make_uniform_grid(0, 1, 1.0)
        for rho in (0.5, 1.0, 2.0):
            anchors = rng.random((3, 2))
            prox = ProximalIntegrand(base, anchors, grid, rho=rho)
            for _ in range(100):
                x = rng.uniform(0.05, 3.0, size=(3, 2))
                for n in range(3):
                    c = rng.uniform(-2.0, 2.0)
                    x_new = x.copy()
                    x_new[n] = prox.inverse(n, grid.points, x, c)
                    back = prox.fn(n, grid.points, x_new)
                    assert np.allclose(back, c, atol=1e-10)

    def test_minimax_proximal_inverse_round_trip(self):
        rng = np.random.default_rng(10)
        base = MinimaxDetectIntegrand.cosexp()
        grid = make_uniform_grid(-2, 2, 0.5)
        prox = ProximalIntegrand(base, rng.random((2, grid.size)), grid, rho=1.0)
        for _ in range(200):
            x = rng.uniform(0.01, 2.0, size=(2, grid.size))
            n = int(rng.integers(2))
            c = rng.uniform(-2.5, 1.0)
            analytic = np.asarray(prox.inverse(n, grid.points, x, c), dtype=float)
            for k in (0, grid.size // 2, grid.size - 1):
                def g(v, k=k):
                    xs = x[:, k : k + 1].copy()
                    xs[n] = v
                    return float(prox.fn(n, grid.points[k : k + 1], xs)[0])
                numeric = solve_monotone(g, c, 0.0, 50.0, 1e-12)
                assert analytic[k] == pytest.approx(numeric, abs=1e-9)


def test_smoothed_minimax_bias_bound():
    integ = MinimaxDetectIntegrand.cosexp()
    rng = np.random.default_rng(11)
    omega = rng.uniform(-5, 5, size=500)
    x = rng.uniform(0.0, 2.0, size=(2, 500))
    for beta in (1e-2, 1e-5):
        sur = integ.smoothed(beta)
        diff = np.asarray(sur.f(omega, x)) - np.asarray(integ.f(omega, x))
        assert np.all(diff >= -1e-15)
        assert np.all(diff <= beta * math.log(2.0) + 1e-15)
