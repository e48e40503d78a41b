"""Convex objectives: point-wise evaluation, partial subderivatives, inverses.

All evaluation methods are pure and operate on numpy arrays: ``omega`` is a
scalar or 1-D array of sample points and ``x`` an array whose first axis
indexes the densities and whose trailing shape broadcasts against ``omega``.
Purity is what allows callers to fan evaluations out over grid points.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grid import Grid

__all__ = [
    "Integrand",
    "WeightedKLIntegrand",
    "MinimaxDetectIntegrand",
    "ProximalIntegrand",
    "lambert_w0",
]


def lambert_w0(z):
    """Principal branch of the Lambert W function on z >= 0.

    Returns w >= 0 with w * exp(w) = z, via Halley iteration from a log-based
    initial guess.  Accepts scalars or arrays; relative residuals land at
    machine precision after a handful of steps.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise ValueError("lambert_w0 requires z >= 0")
    zv = z_arr.ravel()
    w = np.where(zv < np.e, np.log1p(zv), 0.0)
    big = (zv >= np.e) & np.isfinite(zv)
    if np.any(big):
        l1 = np.log(zv[big])
        w[big] = l1 - np.log(l1)
    w[np.isinf(zv)] = np.inf
    active = np.isfinite(zv) & (zv > 0)
    for _ in range(64):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        wi = w[idx]
        ew = np.exp(wi)
        err = wi * ew - zv[idx]
        denom = ew * (wi + 1.0) - (wi + 2.0) * err / (2.0 * wi + 2.0)
        delta = err / denom
        w[idx] = wi - delta
        active[idx] = np.abs(delta) > 1e-16 * (1.0 + np.abs(wi))
    if z_arr.ndim == 0:
        return float(w[0])
    return w.reshape(z_arr.shape)


class Integrand:
    """A jointly convex objective over N nonnegative density values.

    Subclasses provide ``f`` (point-wise objective, extended-real) and ``fn``
    (one element of the partial subdifferential with respect to density ``n``,
    nondecreasing in that argument).  ``inverse`` and ``proximal_inverse``
    may return None, in which case callers fall back to numeric root-finding.
    """

    n_densities: int

    def f(self, omega, x):
        raise NotImplementedError

    def fn(self, n, omega, x):
        raise NotImplementedError

    def subgradient_selection(self, omega, x, c, weight_upper, weight_lower):
        """A joint subgradient field chosen to minimize the residual charge.

        Returns one array per density.  The rows must form a valid element of
        the joint subdifferential of f at every point; where that set is not a
        singleton, implementations may pick the element that minimizes the
        point's residual contribution, making the optimality-gap certificate
        tight at kink points.  ``c`` holds the per-density levels (scalars or
        per-point arrays) and ``weight_upper``/``weight_lower`` the per-density
        factors (x_n - upper_n) and (x_n - lower_n) of the residual products.

        The default covers objectives whose subdifferential is a singleton
        almost everywhere: it returns the fixed ``fn`` selections.
        """
        return [self.fn(n, omega, x) for n in range(self.n_densities)]

    def steepest_subgradient(self, omega, x, offsets=None):
        """A joint subgradient suitable as a descent direction.

        Returns one array per density: a minimal-norm-style element of the
        joint subdifferential of f plus the optional per-density smooth
        ``offsets``.  At kinks the fixed ``fn`` selection can leave some
        coordinate without any pull; implementations should spread the
        subgradient across the kink instead.  The default returns the fixed
        selections, which is exact wherever f is differentiable.
        """
        sel = [self.fn(n, omega, x) for n in range(self.n_densities)]
        if offsets is None:
            return sel
        return [sel[n] + offsets[n] for n in range(self.n_densities)]

    def inverse(self, n, omega, x, c):
        """Generalized inverse of fn(n, ...) in its own argument, or None.

        Must return inf{x_n >= 0 : fn >= c}, with +inf when the level is never
        reached and 0 when it already holds at the domain infimum.  Entry
        ``x[n]`` is ignored.
        """
        return None

    def proximal_inverse(self, n, omega, x, c, anchor, rho):
        """Inverse of fn(n, ...) + rho * (x_n - anchor), or None."""
        return None

    def prox_map(self, anchors, bands, grid, rho, c0, mass_tol):
        """Exact minimizer of the quadratically anchored subproblem, or None.

        Implementations return (weights, levels) solving the band- and
        unit-mass-constrained proximal subproblem directly; levels are the
        mass-constraint multipliers.  Solvers use this instead of coordinate
        descent when available, which matters for objectives whose kinks
        couple the densities.
        """
        return None

    def smoothed(self, beta):
        """A smooth surrogate within a known margin of this objective, or None.

        Used by the reference cross-check solver to anneal away kinks; the
        surrogate must satisfy |surrogate.f - f| <= beta * O(1) point-wise.
        """
        return None


class WeightedKLIntegrand(Integrand):
    """Weighted sum of KL divergences of a reference density from the others.

    With weights alpha_1..alpha_{N-1} (nonnegative, summing to one) the
    point-wise objective is ``sum_m alpha_m * log(x_N / x_m) * x_N`` where
    x_N, the last coordinate, is the reference density.  Boundary conventions:
    the objective is 0 whenever x_N = 0, and +inf when some x_m = 0 < x_N
    with alpha_m > 0.
    """

    def __init__(self, alpha):
        alpha = np.array(alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size < 1:
            raise ConfigError("alpha must be a non-empty 1-D sequence")
        if np.any(alpha < 0):
            raise ConfigError("alpha entries must be nonnegative")
        if abs(float(np.sum(alpha)) - 1.0) > 1e-12:
            raise ConfigError(f"alpha must sum to 1, got {float(np.sum(alpha))}")
        alpha.setflags(write=False)
        self.alpha = alpha
        self.n_densities = alpha.size + 1

    def _log_ratio_sum(self, x, x_ref):
        """sum_m alpha_m * log(x_ref / x_m), with log(0/0) taken as 0."""
        total = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ref = np.log(x_ref)
            for m, a in enumerate(self.alpha):
                if a == 0.0:
                    continue
                term = log_ref - np.log(x[m])
                term = np.where((x_ref == 0.0) & (x[m] == 0.0), 0.0, term)
                total = total + a * term
        return total

    def _log_geo_mean(self, x):
        """sum_m alpha_m * log(x_m); -inf when some weighted entry is zero."""
        total = 0.0
        with np.errstate(divide="ignore"):
            for m, a in enumerate(self.alpha):
                if a == 0.0:
                    continue
                total = total + a * np.log(x[m])
        return total

    def f(self, omega, x):
        x = np.asarray(x, dtype=float)
        x_ref = x[-1]
        with np.errstate(invalid="ignore"):
            out = self._log_ratio_sum(x, x_ref) * x_ref
        return np.where(x_ref == 0.0, 0.0, out)

    def fn(self, n, omega, x):
        x = np.asarray(x, dtype=float)
        x_ref = x[-1]
        if n == self.n_densities - 1:
            return 1.0 + self._log_ratio_sum(x, x_ref)
        a = self.alpha[n]
        if a == 0.0:
            return np.zeros_like(x_ref)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -a * x_ref / x[n]
        return np.where(x_ref == 0.0, 0.0, out)

    def inverse(self, n, omega, x, c):
        x = np.asarray(x, dtype=float)
        if n == self.n_densities - 1:
            with np.errstate(over="ignore"):
                return np.exp((c - 1.0) + self._log_geo_mean(x))
        if c >= 0.0:
            # The subderivative is never positive, so the level is unreachable.
            return np.full_like(x[-1], np.inf)
        return (self.alpha[n] / -c) * x[-1]

    def proximal_inverse(self, n, omega, x, c, anchor, rho):
        x = np.asarray(x, dtype=float)
        anchor = np.asarray(anchor, dtype=float)
        if n == self.n_densities - 1:
            with np.errstate(over="ignore"):
                z = np.exp(c + rho * anchor - 1.0 + self._log_geo_mean(x))
            return lambert_w0(rho * z) / rho
        t = (c + rho * anchor) / (2.0 * rho)
        return t + np.sqrt(t * t + self.alpha[n] * x[-1] / rho)


class MinimaxDetectIntegrand(Integrand):
    """Worst-case expected cost of a binary decision with per-sample costs.

    The point-wise objective is ``-min(r1(w) * x1, r2(w) * x2)``: maximizing
    the expected minimum cost over the bands is the same as minimizing this.
    Piecewise linear, hence convex but not strictly convex.  Ties in the
    subgradient selection go to the first density.
    """

    n_densities = 2

    def __init__(self, r1, r2):
        self.r1 = r1
        self.r2 = r2

    @classmethod
    def cosexp(cls) -> "MinimaxDetectIntegrand":
        """Built-in cost pair r1(w) = 1 + cos(pi w), r2(w) = 2 exp(-|w|)."""
        return cls(
            lambda w: 1.0 + np.cos(np.pi * np.asarray(w, dtype=float)),
            lambda w: 2.0 * np.exp(-np.abs(np.asarray(w, dtype=float))),
        )

    @classmethod
    def from_samples(cls, r1_values, r2_values, grid: Grid) -> "MinimaxDetectIntegrand":
        """Costs given per grid point, extended off-grid by linear interpolation."""
        r1_values = np.array(r1_values, dtype=float)
        r2_values = np.array(r2_values, dtype=float)
        if r1_values.shape != grid.points.shape or r2_values.shape != grid.points.shape:
            raise ConfigError("cost samples must match the grid size")
        if np.any(r1_values < 0) or np.any(r2_values < 0):
            raise ConfigError("cost samples must be nonnegative")
        pts = grid.points

        def make(vals):
            return lambda w: np.interp(w, pts, vals, left=0.0, right=0.0)

        return cls(make(r1_values), make(r2_values))

    # Points this close to the switching curve (relative to the score scale)
    # count as sitting on it for subdifferential purposes; root placement is
    # float-exact only up to rounding, so exact equality would be knife-edged.
    TIE_RTOL = 1e-9

    def _scores(self, omega, x):
        x = np.asarray(x, dtype=float)
        r1 = np.asarray(self.r1(omega), dtype=float)
        r2 = np.asarray(self.r2(omega), dtype=float)
        with np.errstate(invalid="ignore"):
            s1 = r1 * x[0]
            s2 = r2 * x[1]
        # A zero cost silences its density entirely, even at x = +inf.
        s1 = np.where(r1 == 0.0, 0.0, s1)
        s2 = np.where(r2 == 0.0, 0.0, s2)
        return r1, r2, s1, s2

    def f(self, omega, x):
        _, _, s1, s2 = self._scores(omega, x)
        return -np.minimum(s1, s2)

    def fn(self, n, omega, x):
        r1, r2, s1, s2 = self._scores(omega, x)
        if n == 0:
            return np.where(s1 <= s2, -r1, 0.0)
        return np.where(s1 > s2, -r2, 0.0)

    def subgradient_selection(self, omega, x, c, weight_upper, weight_lower):
        """Tightest valid joint subgradient at each point.

        Off the switching curve the subdifferential is the single fixed
        selection.  On the curve it is the segment
        {(-t * r1, -(1 - t) * r2) : t in [0, 1]}; the residual charge is
        piecewise linear in t, so its exact minimum lies at t = 0, t = 1, or
        one of the two points where a component meets its level, and those
        four candidates are compared directly.
        """
        r1, r2, s1, s2 = self._scores(omega, x)
        sigma = s1 - s2
        on_curve = np.abs(sigma) <= self.TIE_RTOL * (s1 + s2)
        g1_fixed = np.where(sigma <= 0.0, -r1, 0.0)
        g2_fixed = np.where(sigma > 0.0, -r2, 0.0)
        if not np.any(on_curve):
            return [g1_fixed, g2_fixed]

        c1 = np.broadcast_to(np.asarray(c[0], dtype=float), g1_fixed.shape)
        c2 = np.broadcast_to(np.asarray(c[1], dtype=float), g2_fixed.shape)

        def charge(values, wu, wl, level):
            diff = values - level
            neg = np.minimum(diff, 0.0)
            pos = np.maximum(diff, 0.0)
            with np.errstate(invalid="ignore"):
                up = np.where((neg == 0.0) | (wu == 0.0), 0.0, wu * neg)
                lo = np.where((pos == 0.0) | (wl == 0.0), 0.0, wl * pos)
            return up + lo

        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(r1 > 0.0, -c1 / r1, 0.0)
            t2 = np.where(r2 > 0.0, 1.0 + c2 / r2, 0.0)
        best_cost = None
        best_t = None
        for t in (
            np.zeros_like(g1_fixed),
            np.ones_like(g1_fixed),
            np.clip(t1, 0.0, 1.0),
            np.clip(t2, 0.0, 1.0),
        ):
            cost = charge(-t * r1, weight_upper[0], weight_lower[0], c1) + charge(
                -(1.0 - t) * r2, weight_upper[1], weight_lower[1], c2
            )
            if best_cost is None:
                best_cost, best_t = cost, t
            else:
                better = cost < best_cost
                best_cost = np.where(better, cost, best_cost)
                best_t = np.where(better, t, best_t)
        g1 = np.where(on_curve, -best_t * r1, g1_fixed)
        g2 = np.where(on_curve, -(1.0 - best_t) * r2, g2_fixed)
        return [g1, g2]

    def steepest_subgradient(self, omega, x, offsets=None):
        """Minimal-norm joint subgradient: on the switching curve the segment
        element closest to the origin (offsets included), so both densities
        receive their share of the pull instead of one going slack."""
        r1, r2, s1, s2 = self._scores(omega, x)
        sigma = s1 - s2
        on_curve = np.abs(sigma) <= self.TIE_RTOL * (s1 + s2)
        g1 = np.where(sigma <= 0.0, -r1, 0.0)
        g2 = np.where(sigma > 0.0, -r2, 0.0)
        o1 = 0.0 if offsets is None else np.asarray(offsets[0], dtype=float)
        o2 = 0.0 if offsets is None else np.asarray(offsets[1], dtype=float)
        if np.any(on_curve):
            denom = r1 * r1 + r2 * r2
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (r1 * o1 - r2 * o2 + r2 * r2) / denom
            t = np.clip(np.where(denom > 0.0, t, 0.0), 0.0, 1.0)
            g1 = np.where(on_curve, -t * r1, g1)
            g2 = np.where(on_curve, -(1.0 - t) * r2, g2)
        return [g1 + o1, g2 + o2]

    def inverse(self, n, omega, x, c):
        x = np.asarray(x, dtype=float)
        r1 = np.asarray(self.r1(omega), dtype=float)
        r2 = np.asarray(self.r2(omega), dtype=float)
        r_own, r_other, x_other = (r1, r2, x[1]) if n == 0 else (r2, r1, x[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            switch = r_other * x_other / r_own
        switch = np.where(r_own == 0.0, np.inf, switch)
        out = np.where(c <= -r_own, 0.0, np.where(c <= 0.0, switch, np.inf))
        # A vanishing own cost makes the subderivative identically zero.
        return np.where(r_own == 0.0, np.where(c <= 0.0, 0.0, np.inf), out)

    def proximal_inverse(self, n, omega, x, c, anchor, rho):
        x = np.asarray(x, dtype=float)
        anchor = np.asarray(anchor, dtype=float)
        r1 = np.asarray(self.r1(omega), dtype=float)
        r2 = np.asarray(self.r2(omega), dtype=float)
        r_own, r_other, x_other = (r1, r2, x[1]) if n == 0 else (r2, r1, x[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            switch = r_other * x_other / r_own
        switch = np.where(r_own == 0.0, np.inf, switch)
        low_root = anchor + (c + r_own) / rho
        high_root = anchor + c / rho
        # Level reached before the jump, after it, or inside it (kink point).
        out = np.where(
            low_root <= switch, low_root, np.maximum(switch, high_root)
        )
        return np.maximum(out, 0.0)

    def prox_map(self, anchors, bands, grid, rho, c0, mass_tol):
        """Exact solution of the anchored subproblem by dual coordinate ascent.

        The two unit-mass constraints are dualized; given their multipliers
        the points decouple, and each point's joint minimizer is one of three
        closed-form candidates (one per cost regime plus the switching curve).
        The dual is smooth and concave in the two multipliers, so alternating
        one-dimensional root finding on the mass defects converges; this is
        what coordinate descent in the densities themselves cannot do when
        iterates sit on the switching curve.
        """
        anchors = np.asarray(anchors, dtype=float)
        omega = grid.points
        r1 = np.asarray(self.r1(omega), dtype=float)
        r2 = np.asarray(self.r2(omega), dtype=float)
        l1, u1 = bands[0].lower, bands[0].upper
        l2, u2 = bands[1].lower, bands[1].upper
        h1, h2 = anchors[0], anchors[1]
        mu = grid.masses
        rr = r1 * r1 + r2 * r2
        with np.errstate(divide="ignore", invalid="ignore"):
            t_lo = np.maximum(l1 / r2, l2 / r1)
            t_hi = np.minimum(u1 / r2, u2 / r1)
        curve_ok = (r1 > 0.0) & (r2 > 0.0) & (t_lo <= t_hi)

        def point_min(c1, c2):
            a1 = h1 + c1 / rho
            a2 = h2 + c2 / rho
            # Half-plane candidates: the quadratic is separable, so clipping
            # the regime minimizer to the box is exact; a clipped point that
            # leaves its regime is dominated by the curve candidate.
            xa1 = np.clip(a1 + r1 / rho, l1, u1)
            xa2 = np.clip(a2, l2, u2)
            ok_a = r1 * xa1 <= r2 * xa2
            xb1 = np.clip(a1, l1, u1)
            xb2 = np.clip(a2 + r2 / rho, l2, u2)
            ok_b = r1 * xb1 >= r2 * xb2
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (r1 * r2 / rho + r2 * a1 + r1 * a2) / rr
            t = np.clip(np.where(curve_ok, t, 0.0), t_lo, t_hi)
            xc1 = r2 * t
            xc2 = r1 * t

            def value(x1, x2):
                s1 = np.where(r1 == 0.0, 0.0, r1 * x1)
                s2 = np.where(r2 == 0.0, 0.0, r2 * x2)
                quad = (x1 - a1) ** 2 + (x2 - a2) ** 2
                return -np.minimum(s1, s2) + 0.5 * rho * quad

            va = np.where(ok_a, value(xa1, xa2), np.inf)
            vb = np.where(ok_b, value(xb1, xb2), np.inf)
            vc = np.where(curve_ok, value(xc1, xc2), np.inf)
            use_c = (vc <= va) & (vc <= vb)
            use_a = ~use_c & (va <= vb)
            x1 = np.where(use_c, xc1, np.where(use_a, xa1, xb1))
            x2 = np.where(use_c, xc2, np.where(use_a, xa2, xb2))
            return x1, x2

        c = np.array([float(c0[0]), float(c0[1])], dtype=float)

        def mass_defect(n, level):
            trial = (level, c[1]) if n == 0 else (c[0], level)
            rows = point_min(*trial)
            return float(np.sum(rows[n] * mu)) - 1.0

        for _ in range(200):
            for n in (0, 1):
                c[n] = _solve_scalar_mass(lambda v, n=n: mass_defect(n, v), c[n], mass_tol)
            x1, x2 = point_min(c[0], c[1])
            defects = (
                abs(float(np.sum(x1 * mu)) - 1.0),
                abs(float(np.sum(x2 * mu)) - 1.0),
            )
            if max(defects) <= mass_tol:
                break
        return np.vstack(point_min(c[0], c[1])), c

    def smoothed(self, beta):
        return _SoftminDetectIntegrand(self, beta)


class _SoftminDetectIntegrand(Integrand):
    """Soft-minimum surrogate of the detection cost: smooth, off by at most
    beta * log(2) point-wise."""

    n_densities = 2

    def __init__(self, base: MinimaxDetectIntegrand, beta: float):
        self.base = base
        self.beta = float(beta)

    def f(self, omega, x):
        _, _, s1, s2 = self.base._scores(omega, x)
        gap = np.abs(s1 - s2) / self.beta
        return -np.minimum(s1, s2) + self.beta * np.log1p(np.exp(-gap))

    def fn(self, n, omega, x):
        r1, r2, s1, s2 = self.base._scores(omega, x)
        z = (s1 - s2) / self.beta
        decay = np.exp(-np.abs(z))
        weight1 = np.where(z >= 0.0, decay / (1.0 + decay), 1.0 / (1.0 + decay))
        if n == 0:
            return -r1 * weight1
        return -r2 * (1.0 - weight1)


def _solve_scalar_mass(defect, start, tol, max_expansions=60):
    """Root of a continuous nondecreasing scalar function, near ``start``.

    Returns a point where |defect| <= tol when reachable; falls back to the
    bisection endpoint once the bracket collapses.
    """
    lo = hi = float(start)
    d_lo = d_hi = defect(lo)
    width = 1.0
    for _ in range(max_expansions):
        if d_lo <= 0.0:
            break
        width *= 2.0
        lo = start - width
        d_lo = defect(lo)
    width = 1.0
    for _ in range(max_expansions):
        if d_hi >= 0.0:
            break
        width *= 2.0
        hi = start + width
        d_hi = defect(hi)
    if abs(d_lo) <= tol:
        return lo
    if abs(d_hi) <= tol:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        d = defect(mid)
        if abs(d) <= tol:
            return mid
        if d < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


class ProximalIntegrand(Integrand):
    """A base objective plus a quadratic pull toward anchor densities.

    The anchors are basis weights on a grid, evaluated off-grid by linear
    interpolation; the penalty makes every convex base strictly convex in
    each argument (for rho > 0).  With rho = 0 it degenerates to the base.
    """

    def __init__(self, base: Integrand, anchors, grid: Grid, rho: float = 1.0):
        anchors = np.array(anchors, dtype=float)
        if anchors.shape != (base.n_densities, grid.size):
            raise ConfigError(
                f"anchors must have shape {(base.n_densities, grid.size)}, "
                f"got {anchors.shape}"
            )
        if rho < 0:
            raise ConfigError("the penalty weight rho must be nonnegative")
        anchors.setflags(write=False)
        self.base = base
        self.anchors = anchors
        self.grid = grid
        self.rho = float(rho)
        self.n_densities = base.n_densities

    def anchor_at(self, n, omega):
        pts = self.grid.points
        if omega is pts:
            # Solver hot path: evaluations at the grid nodes themselves.
            return self.anchors[n]
        return np.interp(omega, pts, self.anchors[n], left=0.0, right=0.0)

    def f(self, omega, x):
        x = np.asarray(x, dtype=float)
        penalty = 0.0
        for n in range(self.n_densities):
            d = x[n] - self.anchor_at(n, omega)
            penalty = penalty + d * d
        return self.base.f(omega, x) + 0.5 * self.rho * penalty

    def fn(self, n, omega, x):
        x = np.asarray(x, dtype=float)
        return self.base.fn(n, omega, x) + self.rho * (x[n] - self.anchor_at(n, omega))

    def subgradient_selection(self, omega, x, c, weight_upper, weight_lower):
        # The penalty separates per coordinate, so the base's joint structure
        # is preserved: select for the base at shifted levels, then shift back.
        x = np.asarray(x, dtype=float)
        shifts = [
            self.rho * (x[n] - self.anchor_at(n, omega))
            for n in range(self.n_densities)
        ]
        shifted_c = [np.asarray(c[n], dtype=float) - shifts[n] for n in range(self.n_densities)]
        base_sel = self.base.subgradient_selection(
            omega, x, shifted_c, weight_upper, weight_lower
        )
        return [base_sel[n] + shifts[n] for n in range(self.n_densities)]

    def steepest_subgradient(self, omega, x, offsets=None):
        x = np.asarray(x, dtype=float)
        shifts = [
            self.rho * (x[n] - self.anchor_at(n, omega))
            for n in range(self.n_densities)
        ]
        if offsets is not None:
            shifts = [shifts[n] + offsets[n] for n in range(self.n_densities)]
        return self.base.steepest_subgradient(omega, x, shifts)

    def inverse(self, n, omega, x, c):
        if self.rho == 0.0:
            return self.base.inverse(n, omega, x, c)
        return self.base.proximal_inverse(n, omega, x, c, self.anchor_at(n, omega), self.rho)
