"""Solvers for convex functionals of probability densities under band constraints.

Densities live between point-wise lower and upper envelopes; the solvers walk
the per-density first-order optimality conditions by block coordinate descent
and certify the result with a residual-based optimality gap.
"""

from .bands import DensityBand, clamp, feasible_init, validate_band
from .bcd import (
    Cyclic,
    LargestResidual,
    RandomRule,
    SolverReport,
    Status,
    TraceEntry,
    bcd_minimize,
    normalization_mass,
    solve_c,
)
from .errors import ConfigError, EvaluationError, NormalizationError, OracleFailure
from .grid import Grid, discrete_integral, interpolate, make_uniform_grid
from .integrands import (
    Integrand,
    MinimaxDetectIntegrand,
    ProximalIntegrand,
    WeightedKLIntegrand,
    lambert_w0,
)
from .oracle import (
    bhattacharyya_bound,
    gaussian_band,
    gaussian_pdf,
    project_onto_constraints,
    projected_gradient_reference,
)
from .prox import prox_minimize
from .residuals import (
    ResidualReport,
    discrete_objective,
    discrete_residuals,
    refined_gap_estimate,
)
from .rootfind import invert_fn_on_grid, solve_monotone

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Cyclic",
    "DensityBand",
    "EvaluationError",
    "Grid",
    "Integrand",
    "LargestResidual",
    "MinimaxDetectIntegrand",
    "NormalizationError",
    "OracleFailure",
    "ProximalIntegrand",
    "RandomRule",
    "ResidualReport",
    "SolverReport",
    "Status",
    "TraceEntry",
    "WeightedKLIntegrand",
    "bcd_minimize",
    "bhattacharyya_bound",
    "clamp",
    "discrete_integral",
    "discrete_objective",
    "discrete_residuals",
    "feasible_init",
    "gaussian_band",
    "gaussian_pdf",
    "interpolate",
    "invert_fn_on_grid",
    "lambert_w0",
    "make_uniform_grid",
    "normalization_mass",
    "project_onto_constraints",
    "projected_gradient_reference",
    "prox_minimize",
    "refined_gap_estimate",
    "solve_c",
    "solve_monotone",
    "validate_band",
]
