"""Density bands: point-wise lower/upper envelopes for feasible densities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import Grid, discrete_integral

# Bounds sampled from continuous functions carry quadrature error, so the
# unit-mass inequalities are checked with slack.  1e-6 admits Gaussian bounds
# sampled on [-5, 5] with step 0.01, whose discrete mass is ~5.7e-7 short.
MASS_SLACK = 1e-6

# Stand-in for infinite upper bounds when a finite envelope is needed.
DEFAULT_UPPER_CAP = 1e6


@dataclass(frozen=True)
class DensityBand:
    """Lower and upper bound samples on a grid; upper entries may be +inf.

    Immutable after construction; shape and ordering checks happen here,
    the mass inequalities are checked by :func:`validate_band`.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ConfigError("band bounds must be 1-D arrays of equal length")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def size(self) -> int:
        return self.lower.size


@dataclass(frozen=True)
class BandVerdict:
    ok: bool
    reason: str = ""
    lower_mass: float = math.nan
    upper_mass: float = math.nan

    def __bool__(self) -> bool:
        return self.ok


def validate_band(band: DensityBand, grid: Grid) -> BandVerdict:
    """Check the feasibility conditions a band must satisfy.

    Accepts iff 0 <= lower <= upper point-wise, the lower mass is at most 1
    and the upper mass at least 1 (both with MASS_SLACK).  Reports the first
    violated condition otherwise.
    """
    if band.size != grid.size:
        raise ConfigError(
            f"band has {band.size} samples but the grid has {grid.size} points"
        )
    if np.any(band.lower < 0):
        return BandVerdict(False, "lower bound has negative entries")
    if np.any(band.lower > band.upper):
        return BandVerdict(False, "lower bound exceeds upper bound somewhere")
    lower_mass = discrete_integral(band.lower, grid)
    upper_mass = float(np.sum(band.upper * grid.masses))
    if lower_mass > 1.0 + MASS_SLACK:
        return BandVerdict(
            False, f"lower-bound mass {lower_mass} exceeds 1", lower_mass, upper_mass
        )
    if upper_mass < 1.0 - MASS_SLACK:
        return BandVerdict(
            False, f"upper-bound mass {upper_mass} is below 1", lower_mass, upper_mass
        )
    return BandVerdict(True, "", lower_mass, upper_mass)


def clamp(values, band: DensityBand) -> np.ndarray:
    """Project values element-wise onto [lower, upper]; +-inf entries allowed."""
    return np.minimum(band.upper, np.maximum(np.asarray(values, dtype=float), band.lower))


def feasible_init(band: DensityBand, grid: Grid, cap: float = DEFAULT_UPPER_CAP) -> np.ndarray:
    """Blend of the band bounds with unit mass.

    Infinite upper entries are replaced by ``cap`` for the blend only.  When
    the band is strictly mass-feasible the result has mass 1 to within 1e-12;
    bands sitting exactly on a mass boundary get the closest achievable blend.
    """
    verdict = validate_band(band, grid)
    if not verdict.ok:
        raise ConfigError(f"cannot initialize from an infeasible band: {verdict.reason}")
    upper = np.minimum(band.upper, np.maximum(band.lower, cap))
    lower_mass = discrete_integral(band.lower, grid)
    upper_mass = discrete_integral(upper, grid)
    if upper_mass < 1.0 - MASS_SLACK:
        raise ConfigError(
            f"upper cap {cap} leaves too little mass ({upper_mass}); raise the cap"
        )
    if upper_mass <= lower_mass:
        return band.lower.copy()
    lam = (1.0 - lower_mass) / (upper_mass - lower_mass)
    lam = min(max(lam, 0.0), 1.0)
    return (1.0 - lam) * band.lower + lam * upper
