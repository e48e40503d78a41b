"""Uniform grids, linear-interpolation basis evaluation, and discrete integration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Relative tolerance for deciding that a step divides an interval into a
# whole number of cells; the count is then snapped to the nearest integer.
_DIVISIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Strictly increasing sample points with positive per-point masses.

    The masses are the quadrature weights of the discrete inner product; for
    uniform grids every mass equals the step, including at the endpoints.
    Instances are immutable after construction and safe for concurrent reads.
    """

    points: np.ndarray
    masses: np.ndarray
    step: float | None = None

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        masses = np.array(self.masses, dtype=float)
        if points.ndim != 1 or masses.ndim != 1 or points.size != masses.size:
            raise ConfigError("points and masses must be 1-D arrays of equal length")
        if points.size < 2:
            raise ConfigError("a grid needs at least two points")
        if not np.all(np.diff(points) > 0):
            raise ConfigError("grid points must be strictly increasing")
        if not np.all(masses > 0):
            raise ConfigError("grid masses must be strictly positive")
        points.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "masses", masses)

    @property
    def size(self) -> int:
        return self.points.size


def make_uniform_grid(lo: float, hi: float, step: float) -> Grid:
    """Build a regular grid on [lo, hi] where every mass equals the step."""
    if not hi > lo:
        raise ConfigError(f"need lo < hi, got [{lo}, {hi}]")
    if not step > 0:
        raise ConfigError(f"step must be positive, got {step}")
    cells = (hi - lo) / step
    n_cells = int(round(cells))
    if n_cells < 1 or abs(cells - n_cells) > _DIVISIBILITY_RTOL * max(1.0, abs(cells)):
        raise ConfigError(
            f"step {step} does not divide [{lo}, {hi}] into a whole number of cells"
        )
    points = np.linspace(lo, hi, n_cells + 1)
    masses = np.full(n_cells + 1, float(step))
    return Grid(points=points, masses=masses, step=float(step))


def interpolate(weights, grid: Grid, omega):
    """Evaluate the piecewise-linear interpolant through (point_k, weight_k).

    Returns 0 outside [points[0], points[-1]], where the basis has no support.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != grid.points.shape:
        raise ConfigError("weights length must match the grid size")
    return np.interp(omega, grid.points, weights, left=0.0, right=0.0)


def discrete_integral(values, grid: Grid) -> float:
    """Mass-weighted sum of per-point values.

    The reduction order is a fixed function of the grid size only, so results
    are bit-identical across repeated runs and thread settings.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.points.shape:
        raise ConfigError("values length must match the grid size")
    return float(np.sum(values * grid.masses))
