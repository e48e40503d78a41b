"""Complementary-slackness residuals and the certified optimality gap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bands import DensityBand
from .errors import ConfigError, EvaluationError
from .grid import Grid
from .integrands import Integrand


@dataclass(frozen=True)
class ResidualReport:
    """Per-density residuals, their total, and the dual multiplier estimates.

    ``gap`` is the sum of all residuals and upper-bounds how far the candidate
    is from the discrete optimum.  ``u`` and ``v`` hold the nonnegative
    multiplier estimates for the upper and lower band constraints on the grid.
    """

    e_upper: np.ndarray
    e_lower: np.ndarray
    e_total: np.ndarray
    gap: float
    u: np.ndarray
    v: np.ndarray


def discrete_residuals(
    integrand: Integrand,
    A: np.ndarray,
    c,
    bands,
    grid: Grid,
) -> ResidualReport:
    """Residuals of a feasible candidate against the per-point optimality conditions.

    For each density: the upper residual pairs (a_n - upper) with the negative
    part of (fn - c_n), the lower residual pairs (a_n - lower) with the positive
    part; both are products of same-signed factors, so every residual is
    nonnegative.  Where a bound is infinite and the matching part vanishes the
    product counts as 0 (the corresponding multiplier is 0 there).

    The subgradient field comes from the integrand's ``subgradient_selection``
    hook, so objectives with kinks can present the valid joint subgradient
    that charges a candidate least; for smooth objectives it is simply ``fn``.
    """
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    N = integrand.n_densities
    if A.shape != (N, grid.size):
        raise ConfigError(f"A must have shape {(N, grid.size)}, got {A.shape}")
    if c.shape != (N,):
        raise ConfigError(f"c must have shape {(N,)}, got {c.shape}")
    if len(bands) != N:
        raise ConfigError(f"expected {N} bands, got {len(bands)}")

    K = grid.size
    e_upper = np.empty(N)
    e_lower = np.empty(N)
    u = np.empty((N, K))
    v = np.empty((N, K))
    weight_upper = np.vstack([A[n] - bands[n].upper for n in range(N)])
    weight_lower = np.vstack([A[n] - bands[n].lower for n in range(N)])
    selection = integrand.subgradient_selection(
        grid.points, A, c, weight_upper, weight_lower
    )
    for n in range(N):
        fvals = np.asarray(selection[n], dtype=float)
        if np.any(np.isnan(fvals)):
            k = int(np.flatnonzero(np.isnan(fvals))[0])
            raise EvaluationError(f"subderivative {n} returned NaN at grid point {k}")
        d_up = weight_upper[n]
        d_lo = weight_lower[n]
        bad = (np.isposinf(fvals) & (d_lo != 0.0)) | (np.isneginf(fvals) & (d_up != 0.0))
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise EvaluationError(
                f"subderivative {n} is infinite at grid point {k} where it "
                f"carries nonzero weight"
            )
        diff = fvals - c[n]
        neg = np.minimum(diff, 0.0)
        pos = np.maximum(diff, 0.0)
        with np.errstate(invalid="ignore"):
            term_up = np.where((neg == 0.0) | (d_up == 0.0), 0.0, d_up * neg)
            term_lo = np.where((pos == 0.0) | (d_lo == 0.0), 0.0, d_lo * pos)
        e_upper[n] = np.sum(term_up * grid.masses)
        e_lower[n] = np.sum(term_lo * grid.masses)
        u[n] = -neg
        v[n] = pos
    e_total = e_upper + e_lower
    return ResidualReport(
        e_upper=e_upper,
        e_lower=e_lower,
        e_total=e_total,
        gap=float(np.sum(e_total)),
        u=u,
        v=v,
    )


def discrete_objective(integrand: Integrand, A: np.ndarray, grid: Grid) -> float:
    """Mass-weighted sum of the point-wise objective over the grid."""
    A = np.asarray(A, dtype=float)
    vals = np.asarray(integrand.f(grid.points, A), dtype=float)
    if np.any(np.isnan(vals)):
        k = int(np.flatnonzero(np.isnan(vals))[0])
        raise EvaluationError(f"objective returned NaN at grid point {k}")
    return float(np.sum(vals * grid.masses))


def refined_gap_estimate(
    integrand: Integrand,
    A: np.ndarray,
    c,
    bound_fns,
    grid: Grid,
    refinement: int = 1,
) -> float:
    """Estimate of the continuous-problem gap on a subdivided grid.

    ``bound_fns`` gives each band as a pair of callables (lower, upper) so the
    bounds can be evaluated between nodes, where the candidate densities are
    linearly interpolated.  Each cell is split into ``refinement`` parts and
    the residual integrands are integrated by the composite trapezoid rule;
    refinement 1 reproduces the discrete residual totals up to the quadrature
    convention at the endpoints.
    """
    if refinement < 1:
        raise ConfigError("refinement must be at least 1")
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    N = integrand.n_densities
    pts = grid.points
    m = int(refinement)
    offsets = np.arange(m) / m
    ref = np.append(
        (pts[:-1, None] + np.diff(pts)[:, None] * offsets).ravel(), pts[-1]
    )
    P = np.vstack([np.interp(ref, pts, A[i]) for i in range(N)])
    d = np.diff(ref)
    w = np.zeros(ref.size)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d

    weight_upper = np.vstack(
        [P[n] - np.asarray(bound_fns[n][1](ref), dtype=float) for n in range(N)]
    )
    weight_lower = np.vstack(
        [P[n] - np.asarray(bound_fns[n][0](ref), dtype=float) for n in range(N)]
    )
    selection = integrand.subgradient_selection(ref, P, c, weight_upper, weight_lower)
    total = 0.0
    for n in range(N):
        fvals = np.asarray(selection[n], dtype=float)
        if np.any(np.isnan(fvals)):
            raise EvaluationError(f"subderivative {n} returned NaN on the refined grid")
        diff = fvals - c[n]
        neg = np.minimum(diff, 0.0)
        pos = np.maximum(diff, 0.0)
        with np.errstate(invalid="ignore"):
            term_up = np.where(
                (neg == 0.0) | (weight_upper[n] == 0.0), 0.0, weight_upper[n] * neg
            )
            term_lo = np.where(
                (pos == 0.0) | (weight_lower[n] == 0.0), 0.0, weight_lower[n] * pos
            )
        total += float(np.sum((term_up + term_lo) * w))
    return total
