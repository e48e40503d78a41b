"""Block coordinate descent on the per-density optimality conditions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .bands import DensityBand, clamp, feasible_init, validate_band
from .errors import ConfigError, NormalizationError
from .grid import Grid, discrete_integral
from .integrands import Integrand
from .residuals import ResidualReport, discrete_residuals
from .rootfind import invert_fn_on_grid

# An iteration "improves" only if the gap drops by at least this much
# (absolute, plus a relative part so tolerance-scale oscillation around a
# nonzero gap is not mistaken for progress); 10 * N non-improving iterations
# in a row count as a stall.
_STALL_DECREASE = 1e-15
_STALL_DECREASE_REL = 1e-7


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    STALLED = "stalled"


@dataclass(frozen=True)
class LargestResidual:
    """Pick the density with the largest residual; ties go to the smallest index."""


@dataclass(frozen=True)
class Cyclic:
    """Round-robin over the densities, starting at the first."""


@dataclass(frozen=True)
class RandomRule:
    """Uniform over all densities except the one selected previously."""

    seed: int


SelectionRule = LargestResidual | Cyclic | RandomRule


@dataclass(frozen=True)
class TraceEntry:
    """Solver state snapshot: taken after ``iteration`` coordinate updates.

    ``selected`` is the density updated by the most recent step (-1 before the
    first update and for outer-iteration snapshots of the proximal solver).
    """

    iteration: int
    selected: int
    c: np.ndarray
    residuals: np.ndarray
    gap: float


@dataclass(frozen=True)
class SolverReport:
    """Everything a solve produced: iterate, levels, residuals, and history."""

    A: np.ndarray
    c: np.ndarray
    residuals: ResidualReport
    trace: list[TraceEntry]
    iterations: int
    coordinate_steps: int
    status: Status
    stall_info: str = ""

    @property
    def gap(self) -> float:
        return self.residuals.gap

    @property
    def gap_trace(self) -> list[tuple[int, float]]:
        return [(t.iteration, t.gap) for t in self.trace]


class _Selector:
    def __init__(self, rule: SelectionRule, n_densities: int):
        self.n = n_densities
        self.rule = rule
        self.prev = -1
        self.cursor = 0
        self.rng = (
            np.random.default_rng(rule.seed) if isinstance(rule, RandomRule) else None
        )

    def pick(self, e_total: np.ndarray) -> int:
        if self.n == 1:
            choice = 0
        elif isinstance(self.rule, LargestResidual):
            choice = int(np.argmax(e_total))
        elif isinstance(self.rule, Cyclic):
            choice = self.cursor
            self.cursor = (self.cursor + 1) % self.n
        else:
            if self.prev < 0:
                choice = int(self.rng.integers(self.n))
            else:
                j = int(self.rng.integers(self.n - 1))
                choice = j + (j >= self.prev)
        self.prev = choice
        return choice


def normalization_mass(
    integrand: Integrand,
    A: np.ndarray,
    n: int,
    c: float,
    band: DensityBand,
    grid: Grid,
    *,
    inversion_tol: float = 1e-9,
    threads: int = 1,
    use_analytic: bool = True,
) -> float:
    """Mass of the band-clamped inverse at level ``c``; nondecreasing in ``c``."""
    row = invert_fn_on_grid(
        integrand, A, n, c, band, grid, inversion_tol,
        threads=threads, use_analytic=use_analytic,
    )
    return float(np.sum(row * grid.masses))


def solve_c(
    integrand: Integrand,
    A: np.ndarray,
    n: int,
    band: DensityBand,
    grid: Grid,
    tol: float,
    *,
    c_prev: float = 0.0,
    inversion_tol: float | None = None,
    threads: int = 1,
    use_analytic: bool = True,
    max_expansions: int = 60,
) -> float:
    """Level c at which the clamped inverse of subderivative ``n`` has unit mass.

    Expands a bracket around ``c_prev`` by doubling, then bisects.  Returns a c
    with |mass(c) - 1| <= tol; on flat stretches of the mass curve the smallest
    such c in the bracket is preferred.  Raises NormalizationError when the
    bracket expansion is exhausted without getting the mass within ``tol``.
    """
    if inversion_tol is None:
        inversion_tol = tol / (grid.size * float(np.max(grid.masses)))

    def mass(value: float) -> float:
        return normalization_mass(
            integrand, A, n, value, band, grid,
            inversion_tol=inversion_tol, threads=threads, use_analytic=use_analytic,
        )

    # Aim well under tol so downstream mass checks have margin to spare.
    vtol = min(tol, 1e-10)

    lo, hi = c_prev - 1.0, c_prev + 1.0
    m_lo, m_hi = mass(lo), mass(hi)
    width = 1.0
    for k in range(max_expansions + 1):
        if m_lo <= 1.0 + vtol:
            break
        if k == max_expansions:
            if m_lo - 1.0 <= tol:
                break
            raise NormalizationError(n, m_lo)
        width *= 2.0
        lo = c_prev - width
        m_lo = mass(lo)
    width = 1.0
    for k in range(max_expansions + 1):
        if m_hi >= 1.0 - vtol:
            break
        if k == max_expansions:
            if 1.0 - m_hi <= tol:
                return hi
            raise NormalizationError(n, m_hi)
        width *= 2.0
        hi = c_prev + width
        m_hi = mass(hi)
    if m_lo >= 1.0 - vtol:
        return lo

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        m = mass(mid)
        if abs(m - 1.0) <= vtol:
            return mid
        if m < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, abs(lo), abs(hi)):
            break
    return hi


def bcd_minimize(
    integrand: Integrand,
    bands,
    grid: Grid,
    eps: float,
    rule: SelectionRule = LargestResidual(),
    max_iter: int | None = None,
    A0: np.ndarray | None = None,
    c0=None,
    *,
    residual_period: int = 1,
    threads: int = 1,
    keep_trace: bool = True,
) -> SolverReport:
    """Minimize the discretized functional by block coordinate descent.

    Each iteration recomputes the residuals (every ``residual_period``-th
    iteration when that is above 1), selects a density by ``rule``, finds the
    level c at which its clamped inverse has unit mass, and replaces the row
    with that inverse.  Terminates once the residual gap is at most ``eps``.

    Parameters
    ----------
    integrand : the convex objective; needs ``fn`` and optionally ``inverse``.
    bands : one DensityBand per density.
    grid : the discretization grid.
    eps : gap tolerance for convergence; must be positive.
    rule : coordinate selection rule.
    max_iter : update budget; defaults to 10000 per density.
    A0 : starting weights, one row per density; defaults to a feasible blend of
        each band.  Rows must lie within their bands (tiny overshoots from
        sampled bounds are clamped away); their masses are restored by the
        first update of each row.
    c0 : starting levels; defaults to zeros.

    Returns
    -------
    SolverReport with the final weights, levels, residuals, trace, and status:
    CONVERGED (gap <= eps), MAX_ITERATIONS, or STALLED (the gap stopped
    decreasing, or a unit-mass search failed; expected for objectives that are
    not strictly convex).
    """
    N = integrand.n_densities
    if len(bands) != N:
        raise ConfigError(f"expected {N} bands, got {len(bands)}")
    if not eps > 0:
        raise ConfigError("eps must be positive")
    if residual_period < 1:
        raise ConfigError("residual_period must be at least 1")
    for i, band in enumerate(bands):
        verdict = validate_band(band, grid)
        if not verdict.ok:
            raise ConfigError(f"band {i} is infeasible: {verdict.reason}")
    K = grid.size
    if max_iter is None:
        max_iter = 10000 * N

    if A0 is None:
        A = np.vstack([feasible_init(band, grid) for band in bands])
    else:
        A = np.array(A0, dtype=float)
        if A.shape != (N, K):
            raise ConfigError(f"A0 must have shape {(N, K)}, got {A.shape}")
        for i, band in enumerate(bands):
            overshoot = max(
                float(np.max(band.lower - A[i], initial=0.0)),
                float(np.max(A[i] - band.upper, initial=0.0)),
            )
            if overshoot > 1e-9:
                raise ConfigError(f"A0 row {i} violates its band by {overshoot}")
            A[i] = clamp(A[i], band)
    c = np.zeros(N) if c0 is None else np.array(c0, dtype=float)
    if c.shape != (N,):
        raise ConfigError(f"c0 must have shape {(N,)}, got {c.shape}")

    max_mass = float(np.max(grid.masses))
    inversion_tol = eps / (10.0 * K * max_mass)
    c_tol = eps / (10.0 * N)

    selector = _Selector(rule, N)
    trace: list[TraceEntry] = []
    best_gap = np.inf
    stall_count = 0
    stall_limit = 10 * N
    status = Status.MAX_ITERATIONS
    stall_info = ""
    it = 0
    steps = 0
    last_selected = -1
    report = None
    e_total = np.zeros(N)

    while True:
        if it % residual_period == 0 or it >= max_iter:
            report = discrete_residuals(integrand, A, c, bands, grid)
            e_total = report.e_total
            if keep_trace:
                trace.append(
                    TraceEntry(it, last_selected, c.copy(), e_total.copy(), report.gap)
                )
            if report.gap <= eps:
                status = Status.CONVERGED
                break
            margin = max(_STALL_DECREASE, _STALL_DECREASE_REL * report.gap)
            if report.gap < best_gap - margin:
                best_gap = report.gap
                stall_count = 0
            else:
                stall_count += 1
                if stall_count >= stall_limit:
                    status = Status.STALLED
                    stall_info = (
                        f"gap stuck at {report.gap!r} for {stall_limit} iterations"
                    )
                    break
        if it >= max_iter:
            status = Status.MAX_ITERATIONS
            break
        n_sel = selector.pick(e_total)
        try:
            c_new = solve_c(
                integrand, A, n_sel, bands[n_sel], grid, c_tol,
                c_prev=float(c[n_sel]), inversion_tol=inversion_tol, threads=threads,
            )
        except NormalizationError as err:
            status = Status.STALLED
            stall_info = str(err)
            break
        c[n_sel] = c_new
        A[n_sel] = invert_fn_on_grid(
            integrand, A, n_sel, c_new, bands[n_sel], grid, inversion_tol,
            threads=threads,
        )
        last_selected = n_sel
        it += 1
        steps += 1

    if report is None:
        report = discrete_residuals(integrand, A, c, bands, grid)
    return SolverReport(
        A=A,
        c=c,
        residuals=report,
        trace=trace,
        iterations=it,
        coordinate_steps=steps,
        status=status,
        stall_info=stall_info,
    )
