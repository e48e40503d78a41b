import math

import numpy as np
import pytest

from bandmin import (
    DensityBand,
    EvaluationError,
    Integrand,
    WeightedKLIntegrand,
    invert_fn_on_grid,
    make_uniform_grid,
    solve_monotone,
)
from bandmin.oracle import gaussian_band, gaussian_pdf


class TestSolveMonotone:
    def test_identity(self):
        assert solve_monotone(lambda x: x, 0.3, 0.0, 1.0, 1e-12) == pytest.approx(
            0.3, abs=1e-12
        )

    def test_step_function_infimum(self):
        g = lambda x: 0.0 if x < 0.5 else 1.0
        assert solve_monotone(g, 1.0, 0.0, 1.0, 1e-9) == pytest.approx(0.5, abs=1e-8)

    def test_cube_root(self):
        assert solve_monotone(lambda x: x**3, 8.0, 0.0, 3.0, 1e-10) == pytest.approx(
            2.0, abs=1e-9
        )

    def test_unreachable_level_returns_hi(self):
        assert solve_monotone(lambda x: x, 5.0, 0.0, 1.0, 1e-9) == 1.0

    def test_level_already_met_returns_lo(self):
        assert solve_monotone(lambda x: x, -1.0, 0.0, 1.0, 1e-9) == 0.0

    def test_bad_bracket(self):
        with pytest.raises(ValueError):
            solve_monotone(lambda x: x, 0.0, 1.0, 0.0, 1e-9)
        with pytest.raises(ValueError):
            solve_monotone(lambda x: x, 0.0, 0.0, 1.0, 0.0)

    def test_bracketing_semantics(self):
        rng = np.random.default_rng(0)
        tol = 1e-9
        for _ in range(200):
            a, b = np.sort(rng.uniform(-5, 5, size=2))
            if b - a < 10 * tol:
                continue
            coeffs = rng.uniform(0.1, 2.0, size=3)
            g = lambda x: coeffs[0] * x + coeffs[1] * x**3 + coeffs[2] * math.atan(x)
            target = rng.uniform(g(a), g(b))
            root = solve_monotone(g, target, a, b, tol)
            assert g(root - tol) < target or root - tol < a
            assert g(root + tol) >= target or root + tol > b

    def test_evaluation_budget(self):
        calls = 0

        def g(x):
            nonlocal calls
            calls += 1
            return x

        tol = 1e-9
        solve_monotone(g, 0.37, 0.0, 1.0, tol)
        assert calls <= math.ceil(math.log2(1.0 / tol)) + 2


class TestInvertOnGrid:
    @pytest.fixture()
    def setup(self):
        grid = make_uniform_grid(-2, 2, 0.25)
        band = gaussian_band(0.0, 1.0, 0.8, 1.2, grid)
        integ = WeightedKLIntegrand([0.6, 0.4])
        rng = np.random.default_rng(1)
        A = np.vstack(
            [
                band.lower + rng.random(grid.size) * (band.upper - band.lower)
                for _ in range(3)
            ]
        )
        return grid, band, integ, A

    def test_nonnegative_level_pins_everything_at_upper(self, setup):
        grid, band, integ, A = setup
        out = invert_fn_on_grid(integ, A, 0, 0.5, band, grid, 1e-10)
        assert np.array_equal(out, band.upper)
        out_num = invert_fn_on_grid(
            integ, A, 0, 0.5, band, grid, 1e-10, use_analytic=False
        )
        assert np.array_equal(out_num, band.upper)

    def test_degenerate_band_short_circuits(self, setup):
        grid, _, integ, A = setup
        phi = gaussian_pdf(grid.points)
        band = DensityBand(lower=phi, upper=phi)
        evals = []

        class Probe(WeightedKLIntegrand):
            def fn(self, n, omega, x):
                evals.append(np.asarray(omega).size)
                return super().fn(n, omega, x)

        probe = Probe([0.6, 0.4])
        out = invert_fn_on_grid(probe, A, 0, -0.3, band, grid, 1e-10, use_analytic=False)
        assert np.array_equal(out, phi)
        # endpoint checks only: no bisection evaluations
        assert sum(evals) <= 2 * grid.size

    def test_unconstrained_band_recovers_reference_row(self, setup):
        grid, _, integ, A = setup
        wide = DensityBand(lower=np.zeros(grid.size), upper=np.full(grid.size, 10.0))
        out = invert_fn_on_grid(integ, A, 0, -integ.alpha[0], wide, grid, 1e-12)
        assert np.allclose(out, A[2], atol=1e-10)
        out_num = invert_fn_on_grid(
            integ, A, 0, -integ.alpha[0], wide, grid, 1e-12, use_analytic=False
        )
        assert np.allclose(out_num, A[2], atol=1e-10)

    def test_analytic_and_numeric_paths_agree(self, setup):
        grid, band, integ, A = setup
        rng = np.random.default_rng(2)
        tol = 1e-10
        for _ in range(50):
            n = int(rng.integers(3))
            c = -rng.uniform(0.05, 3.0) if n < 2 else rng.uniform(-1.0, 2.0)
            a_path = invert_fn_on_grid(integ, A, n, c, band, grid, tol)
            n_path = invert_fn_on_grid(
                integ, A, n, c, band, grid, tol, use_analytic=False
            )
            assert np.max(np.abs(a_path - n_path)) <= 10 * tol

    def test_output_stays_in_band(self, setup):
        grid, band, integ, A = setup
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(3))
            c = rng.uniform(-4.0, 1.0)
            out = invert_fn_on_grid(integ, A, n, c, band, grid, 1e-9, use_analytic=False)
            assert np.all(out >= band.lower) and np.all(out <= band.upper)

    def test_threads_do_not_change_results(self, setup):
        grid, band, integ, A = setup
        one = invert_fn_on_grid(integ, A, 0, -0.5, band, grid, 1e-11, use_analytic=False)
        many = invert_fn_on_grid(
            integ, A, 0, -0.5, band, grid, 1e-11, use_analytic=False, threads=4
        )
        assert np.array_equal(one, many)

    def test_per_point_evaluation_budget(self, setup):
        grid, band, integ, A = setup
        counts = np.zeros(grid.size, dtype=int)

        class Counting(WeightedKLIntegrand):
            def fn(self, n, omega, x):
                # omega arrives as a subset of grid points; count each one
                idx = np.searchsorted(grid.points, np.atleast_1d(omega))
                counts[idx] += 1
                return super().fn(n, omega, x)

        probe = Counting([0.6, 0.4])
        tol = 1e-8
        invert_fn_on_grid(probe, A, 0, -0.7, band, grid, tol, use_analytic=False)
        widths = band.upper - band.lower
        budget = np.ceil(np.log2(np.maximum(widths / tol, 2.0))) + 2
        assert np.all(counts <= budget)

    def test_nan_raises_evaluation_error(self, setup):
        grid, band, _, A = setup

        class Broken(Integrand):
            n_densities = 3

            def fn(self, n, omega, x):
                out = np.asarray(x, dtype=float)[n] * 0.0
                out[np.asarray(omega) > 1.5] = np.nan
                return out

        with pytest.raises(EvaluationError):
            invert_fn_on_grid(Broken(), A, 0, -0.5, band, grid, 1e-9)

    def test_infinite_upper_bracket_expansion(self, setup):
        grid, _, integ, A = setup
        band = DensityBand(lower=np.zeros(grid.size), upper=np.full(grid.size, np.inf))
        out = invert_fn_on_grid(
            integ, A, 0, -integ.alpha[0], band, grid, 1e-11, use_analytic=False
        )
        # same reference-row solution as the capped case
        assert np.allclose(out, A[2], atol=1e-9)

    def test_unreachable_level_hits_cap_with_warning(self, setup):
        grid, _, integ, A = setup
        band = DensityBand(lower=np.zeros(grid.size), upper=np.full(grid.size, np.inf))
        with pytest.warns(RuntimeWarning):
            out = invert_fn_on_grid(
                integ, A, 0, 0.5, band, grid, 1e-9, use_analytic=False
            )
        assert np.all(out == 1e12)
