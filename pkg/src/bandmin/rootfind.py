"""Monotone one-dimensional root finding and per-grid-point inversion."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .bands import DensityBand, clamp
from .errors import EvaluationError
from .grid import Grid
from .integrands import Integrand

# Where an upper bound is infinite, bracket expansion stops here and the cap
# stands in for "the level is never reached on any finite interval".
BRACKET_CAP = 1e12


def solve_monotone(g, target, lo, hi, tol):
    """Smallest x in [lo, hi] with g(x) >= target, located to within tol.

    ``g`` must be nondecreasing; jumps and flat stretches are fine.  Returns
    ``hi`` when the target is never reached on the interval and ``lo`` when it
    already holds there.  Uses at most ceil(log2((hi - lo) / tol)) + 2
    evaluations of ``g``.
    """
    if lo > hi:
        raise ValueError(f"need lo <= hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if g(hi) < target:
        return hi
    if g(lo) >= target:
        return lo
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if not a < mid < b:
            break
        if g(mid) >= target:
            b = mid
        else:
            a = mid
    return b


def invert_fn_on_grid(
    integrand: Integrand,
    A: np.ndarray,
    n: int,
    c: float,
    band: DensityBand,
    grid: Grid,
    tol: float,
    *,
    threads: int = 1,
    use_analytic: bool = True,
) -> np.ndarray:
    """Generalized inverse of subderivative ``n`` at level ``c``, per grid point,
    clamped to the band.

    Endpoint checks pin points whose solution lies at a band bound without any
    root finding; the remaining points are bisected independently.  An analytic
    inverse on the integrand, when present and ``use_analytic`` is set, replaces
    the bisection entirely.  With ``threads > 1`` the points are split into
    contiguous index chunks processed concurrently; per-point arithmetic is
    identical either way, so results do not depend on the thread count.
    """
    A = np.asarray(A, dtype=float)
    if use_analytic:
        inv = integrand.inverse(n, grid.points, A, c)
        if inv is not None:
            inv = np.asarray(inv, dtype=float)
            if np.any(np.isnan(inv)):
                k = int(np.flatnonzero(np.isnan(inv))[0])
                raise EvaluationError(
                    f"analytic inverse of subderivative {n} returned NaN at grid point {k}"
                )
            return clamp(inv, band)

    if threads != 1:
        count = threads if threads > 0 else None
        chunks = np.array_split(np.arange(grid.size), max(1, threads))
        chunks = [ch for ch in chunks if ch.size]
        with ThreadPoolExecutor(max_workers=count or len(chunks)) as pool:
            parts = list(
                pool.map(
                    lambda ch: _invert_chunk(integrand, A, n, c, band, grid, tol, ch),
                    chunks,
                )
            )
        out = np.concatenate([p[0] for p in parts])
        capped = sum(p[1] for p in parts)
    else:
        out, capped = _invert_chunk(integrand, A, n, c, band, grid, tol, np.arange(grid.size))
    if capped:
        warnings.warn(
            f"{capped} grid points hit the bracket cap {BRACKET_CAP:g} while "
            f"inverting subderivative {n}; the level {c!r} is unreachable there",
            RuntimeWarning,
            stacklevel=2,
        )
    return out


def _invert_chunk(integrand, A, n, c, band, grid, tol, idx):
    """Bisect the points in ``idx``; returns (values, number of capped points)."""
    omega = grid.points[idx]
    lower = band.lower[idx]
    upper = band.upper[idx]
    X = A[:, idx]
    out = np.empty(idx.size, dtype=float)

    def fn_at(values, cols):
        Xc = X[:, cols].copy()
        Xc[n] = values
        vals = np.asarray(integrand.fn(n, omega[cols], Xc), dtype=float)
        if np.any(np.isnan(vals)):
            bad = int(idx[cols[int(np.flatnonzero(np.isnan(vals))[0])]])
            raise EvaluationError(
                f"subderivative {n} returned NaN at grid point {bad}"
            )
        return vals

    cols = np.arange(idx.size)

    # Solutions pinned at the lower bound: the level already holds there.
    g_lo = fn_at(lower, cols)
    pinned_lo = g_lo >= c
    out[pinned_lo] = lower[pinned_lo]
    open_cols = cols[~pinned_lo]
    if open_cols.size == 0:
        return out, 0

    # Solutions pinned at a finite upper bound: the level is not reached there.
    finite_up = np.isfinite(upper[open_cols])
    hi = np.empty(open_cols.size, dtype=float)
    capped = 0
    if np.any(finite_up):
        fin_cols = open_cols[finite_up]
        g_hi = fn_at(upper[fin_cols], fin_cols)
        pin = g_hi <= c
        out[fin_cols[pin]] = upper[fin_cols[pin]]
        hi[finite_up] = upper[fin_cols]
        open_mask = np.ones(open_cols.size, dtype=bool)
        open_mask[np.flatnonzero(finite_up)[pin]] = False
    else:
        open_mask = np.ones(open_cols.size, dtype=bool)
    if np.any(~finite_up):
        # Infinite upper bound: expand the bracket by doubling until the level
        # is reached, or give up at the cap.
        inf_sel = np.flatnonzero(~finite_up)
        inf_cols = open_cols[inf_sel]
        trial = np.maximum(lower[inf_cols], 1.0)
        reached = np.zeros(inf_cols.size, dtype=bool)
        while True:
            todo = ~reached
            if not np.any(todo):
                break
            vals = fn_at(trial[todo], inf_cols[todo])
            hit = vals >= c
            sel = np.flatnonzero(todo)
            reached[sel[hit]] = True
            grow = sel[~hit]
            if grow.size and np.all(trial[grow] >= BRACKET_CAP):
                out[inf_cols[grow]] = BRACKET_CAP
                capped += grow.size
                open_mask[inf_sel[grow]] = False
                break
            trial[grow] = np.minimum(trial[grow] * 2.0, BRACKET_CAP)
        hi[inf_sel] = trial

    work = open_cols[open_mask]
    if work.size == 0:
        return out, capped
    a = lower[work].copy()
    b = hi[open_mask].copy()
    # Invariant: fn(a) < c <= fn(b); bisect each point until its own bracket
    # collapses, evaluating only still-active points.
    active = b - a > tol
    while np.any(active):
        act = np.flatnonzero(active)
        mid = 0.5 * (a[act] + b[act])
        stuck = (mid <= a[act]) | (mid >= b[act])
        if np.any(stuck):
            active[act[stuck]] = False
            act = act[~stuck]
            mid = mid[~stuck]
            if act.size == 0:
                break
        vals = fn_at(mid, work[act])
        ge = vals >= c
        b[act] = np.where(ge, mid, b[act])
        a[act] = np.where(ge, a[act], mid)
        active[act] = b[act] - a[act] > tol
    out[work] = b
    return out, capped
