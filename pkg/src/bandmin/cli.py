"""Command-line front end: config ingestion, solver dispatch, CSV emission."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bands import DensityBand, validate_band
from .bcd import Cyclic, LargestResidual, RandomRule, SolverReport, Status, bcd_minimize
from .errors import ConfigError
from .grid import Grid, make_uniform_grid
from .integrands import Integrand, MinimaxDetectIntegrand, WeightedKLIntegrand
from .oracle import gaussian_pdf, projected_gradient_reference
from .prox import prox_minimize
from .residuals import discrete_objective

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAX_ITERATIONS = 2
EXIT_STALLED = 3
EXIT_VERIFY_MISMATCH = 4

_STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.MAX_ITERATIONS: EXIT_MAX_ITERATIONS,
    Status.STALLED: EXIT_STALLED,
}

_RULES = ("largest_residual", "cyclic", "random")


@dataclass
class SolveConfig:
    """A fully validated run description, parsed from one JSON document."""

    grid: Grid
    bands: list[DensityBand]
    integrand: Integrand
    algorithm: str
    epsilon: float
    rule: str
    seed: int | None
    max_iter: int | None
    max_outer: int
    rho: float
    inner_epsilon: float | None
    output_dir: str
    init: str | list
    compare_runs: int
    band_means: list[tuple[float, float] | None] = field(default_factory=list)
    verify_steps: int = 20000
    verify_step_size: float = 1e-2
    verify_tolerance: float = 1e-5


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config field '{key}' is missing")
    return cfg[key]


def _as_float(value, key: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config field '{key}' must be a number, got {value!r}")


def _build_band(spec: dict, index: int, grid: Grid):
    """Returns (band, (mean, variance) or None for non-gaussian specs)."""
    if not isinstance(spec, dict):
        raise ConfigError(f"config field 'densities[{index}]' must be an object")
    kind = spec.get("type", "gaussian")
    if kind == "gaussian":
        mean = _as_float(_require(spec, "mean"), f"densities[{index}].mean")
        variance = _as_float(_require(spec, "variance"), f"densities[{index}].variance")
        lo_scale = _as_float(_require(spec, "lo_scale"), f"densities[{index}].lo_scale")
        hi_scale = _as_float(_require(spec, "hi_scale"), f"densities[{index}].hi_scale")
        density = gaussian_pdf(grid.points, mean, variance)
        band = DensityBand(lower=lo_scale * density, upper=hi_scale * density)
        center = (mean, variance)
    elif kind == "explicit":
        lower = np.array([_as_float(v, f"densities[{index}].lower") for v in _require(spec, "lower")])
        upper = np.array([_as_float(v, f"densities[{index}].upper") for v in _require(spec, "upper")])
        band = DensityBand(lower=lower, upper=upper)
        center = None
    else:
        raise ConfigError(f"config field 'densities[{index}].type' must be "
                          f"'gaussian' or 'explicit', got {kind!r}")
    verdict = validate_band(band, grid)
    if not verdict.ok:
        raise ConfigError(f"config field 'densities[{index}]' is infeasible: {verdict.reason}")
    return band, center


def _build_integrand(spec: dict, grid: Grid) -> Integrand:
    name = _require(spec, "name")
    if name == "weighted_kl":
        alpha = _require(spec, "alpha")
        try:
            return WeightedKLIntegrand(alpha)
        except ConfigError as err:
            raise ConfigError(f"config field 'objective.alpha' is invalid: {err}")
    if name == "minimax_detect":
        costs = spec.get("costs", "cosexp")
        if costs == "cosexp":
            return MinimaxDetectIntegrand.cosexp()
        if isinstance(costs, dict):
            r1 = np.array(_require(costs, "r1"), dtype=float)
            r2 = np.array(_require(costs, "r2"), dtype=float)
            return MinimaxDetectIntegrand.from_samples(r1, r2, grid)
        raise ConfigError("config field 'objective.costs' must be 'cosexp' or "
                          "an object with 'r1' and 'r2' arrays")
    raise ConfigError(f"config field 'objective.name' must be 'weighted_kl' or "
                      f"'minimax_detect', got {name!r}")


def load_config(path) -> SolveConfig:
    """Parse and validate a run configuration from a JSON file."""
    try:
        with open(path) as handle:
            cfg = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}")

    grid_spec = _require(cfg, "grid")
    grid = make_uniform_grid(
        _as_float(_require(grid_spec, "lo"), "grid.lo"),
        _as_float(_require(grid_spec, "hi"), "grid.hi"),
        _as_float(_require(grid_spec, "step"), "grid.step"),
    )
    integrand = _build_integrand(_require(cfg, "objective"), grid)
    density_specs = _require(cfg, "densities")
    if len(density_specs) != integrand.n_densities:
        raise ConfigError(
            f"config field 'densities' has {len(density_specs)} entries but the "
            f"objective needs {integrand.n_densities}"
        )
    bands = []
    band_means = []
    for i, spec in enumerate(density_specs):
        band, center = _build_band(spec, i, grid)
        bands.append(band)
        band_means.append(center)

    epsilon = _as_float(_require(cfg, "epsilon"), "epsilon")
    if not epsilon > 0:
        raise ConfigError("config field 'epsilon' must be positive")
    algorithm = cfg.get("algorithm", "bcd")
    if algorithm not in ("bcd", "prox"):
        raise ConfigError(f"config field 'algorithm' must be 'bcd' or 'prox', got {algorithm!r}")
    rule = cfg.get("rule", "largest_residual")
    if rule not in _RULES:
        raise ConfigError(f"config field 'rule' must be one of {_RULES}, got {rule!r}")
    seed = cfg.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("config field 'seed' must be an integer")
    if rule == "random" and seed is None:
        raise ConfigError("config field 'seed' is required when rule is 'random'")
    max_iter = cfg.get("max_iter")
    if max_iter is not None and (not isinstance(max_iter, int) or max_iter < 0):
        raise ConfigError("config field 'max_iter' must be a nonnegative integer")
    max_outer = cfg.get("max_outer", 10000)
    if not isinstance(max_outer, int) or max_outer < 0:
        raise ConfigError("config field 'max_outer' must be a nonnegative integer")
    rho = _as_float(cfg.get("rho", 1.0), "rho")
    if not rho > 0:
        raise ConfigError("config field 'rho' must be positive")
    inner_epsilon = cfg.get("inner_epsilon")
    if inner_epsilon is not None:
        inner_epsilon = _as_float(inner_epsilon, "inner_epsilon")
        if not inner_epsilon > 0:
            raise ConfigError("config field 'inner_epsilon' must be positive")
    init = cfg.get("init", "blend")
    if isinstance(init, str):
        if init not in ("blend", "center"):
            raise ConfigError("config field 'init' must be 'blend', 'center', or a list of rows")
        if init == "center" and any(center is None for center in band_means):
            raise ConfigError("config field 'init' is 'center' but not every density is gaussian")
    elif not isinstance(init, list):
        raise ConfigError("config field 'init' must be 'blend', 'center', or a list of rows")
    compare_runs = cfg.get("compare_runs", 100)
    if not isinstance(compare_runs, int) or compare_runs < 1:
        raise ConfigError("config field 'compare_runs' must be a positive integer")
    verify = cfg.get("verify", {})

    return SolveConfig(
        grid=grid,
        bands=bands,
        integrand=integrand,
        algorithm=algorithm,
        epsilon=epsilon,
        rule=rule,
        seed=seed,
        max_iter=max_iter,
        max_outer=max_outer,
        rho=rho,
        inner_epsilon=inner_epsilon,
        output_dir=cfg.get("output_dir", "out"),
        init=init,
        compare_runs=compare_runs,
        band_means=band_means,
        verify_steps=int(verify.get("steps", 20000)),
        verify_step_size=_as_float(verify.get("step_size", 1e-2), "verify.step_size"),
        verify_tolerance=_as_float(verify.get("tolerance", 1e-5), "verify.tolerance"),
    )


def _initial_weights(config: SolveConfig) -> np.ndarray | None:
    if config.init == "blend":
        return None
    if config.init == "center":
        rows = [
            gaussian_pdf(config.grid.points, mean, variance)
            for (mean, variance) in config.band_means
        ]
        return np.vstack(rows)
    A0 = np.array(config.init, dtype=float)
    if A0.shape != (config.integrand.n_densities, config.grid.size):
        raise ConfigError(
            f"config field 'init' must have "
            f"{config.integrand.n_densities} rows of {config.grid.size} values"
        )
    return A0


def _make_rule(name: str, seed: int | None):
    if name == "largest_residual":
        return LargestResidual()
    if name == "cyclic":
        return Cyclic()
    return RandomRule(seed=seed)


def _solve(config: SolveConfig, threads: int) -> SolverReport:
    rule = _make_rule(config.rule, config.seed)
    A0 = _initial_weights(config)
    if config.algorithm == "bcd":
        return bcd_minimize(
            config.integrand, config.bands, config.grid, config.epsilon, rule,
            max_iter=config.max_iter, A0=A0, threads=threads,
        )
    return prox_minimize(
        config.integrand, config.bands, config.grid, config.epsilon, rule,
        max_outer=config.max_outer, rho=config.rho, inner_eps=config.inner_epsilon,
        A0=A0, inner_max_iter=config.max_iter, threads=threads,
    )


def _fmt(value: float) -> str:
    """17 significant digits: round-trip safe for 64-bit floats."""
    return f"{value:.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(row) + "\n")


def _write_outputs(config: SolveConfig, report: SolverReport, out_dir: Path) -> None:
    grid = config.grid
    N = config.integrand.n_densities
    A = report.A

    header = ["omega"] + [f"q_{n + 1}" for n in range(N)]
    for n in range(N):
        header += [f"lower_{n + 1}", f"upper_{n + 1}"]
    rows = []
    for k in range(grid.size):
        row = [_fmt(grid.points[k])] + [_fmt(A[n, k]) for n in range(N)]
        for n in range(N):
            row += [_fmt(config.bands[n].lower[k]), _fmt(config.bands[n].upper[k])]
        rows.append(row)
    _write_csv(out_dir / "densities.csv", header, rows)

    if N >= 2:
        with np.errstate(divide="ignore", invalid="ignore"):
            llr = [np.log(A[i] / A[-1]) for i in range(N - 1)]
        header = ["omega"] + [f"llr_{i + 1}" for i in range(N - 1)]
        rows = [
            [_fmt(grid.points[k])] + [_fmt(llr[i][k]) for i in range(N - 1)]
            for k in range(grid.size)
        ]
        _write_csv(out_dir / "llr.csv", header, rows)

    header = (
        ["iteration", "selected"]
        + [f"c_{n + 1}" for n in range(N)]
        + [f"e_{n + 1}" for n in range(N)]
        + ["gap"]
    )
    rows = [
        [str(entry.iteration), str(entry.selected)]
        + [_fmt(v) for v in entry.c]
        + [_fmt(v) for v in entry.residuals]
        + [_fmt(entry.gap)]
        for entry in report.trace
    ]
    _write_csv(out_dir / "trace.csv", header, rows)

    summary = {
        "status": report.status.value,
        "iterations": report.iterations,
        "coordinate_steps": report.coordinate_steps,
        "gap": report.gap,
        "epsilon": config.epsilon,
        "algorithm": config.algorithm,
        "rule": config.rule,
        "objective": discrete_objective(config.integrand, report.A, grid),
    }
    with open(out_dir / "report", "w") as handle:
        json.dump(summary, handle, indent=2)
        handle.write("\n")


def run_solve(config_path, output_dir=None, threads: int = 1, quiet: bool = False) -> int:
    """Solve one configured problem and write densities, ratios, trace, report."""
    config = load_config(config_path)
    out_dir = Path(output_dir if output_dir is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _solve(config, threads)
    _write_outputs(config, report, out_dir)
    if not quiet:
        print(
            f"status={report.status.value} iterations={report.iterations} "
            f"coordinate_steps={report.coordinate_steps} gap={report.gap:.3e} "
            f"outputs={out_dir}"
        )
        if report.status is Status.STALLED and config.algorithm == "bcd":
            print(
                "hint: the gap stopped decreasing; objectives that are not "
                "strictly convex usually need \"algorithm\": \"prox\"",
                file=sys.stderr,
            )
    return _STATUS_EXIT[report.status]


def compare_rules(
    integrand: Integrand,
    bands,
    grid: Grid,
    epsilon: float,
    *,
    algorithm: str = "bcd",
    seeds=(0,),
    max_iter: int | None = None,
    max_outer: int = 10000,
    rho: float = 1.0,
    A0: np.ndarray | None = None,
    threads: int = 1,
) -> list[dict]:
    """Run the problem under each selection rule; returns one stats row per rule.

    Deterministic rules run once; the random rule runs once per seed.  The
    iteration numbers count coordinate descent steps, inner ones included.
    """
    rows = []
    for rule_name in _RULES:
        rule_seeds = list(seeds) if rule_name == "random" else [None]
        iterations = []
        converged = 0
        started = time.perf_counter()
        for seed in rule_seeds:
            rule = _make_rule(rule_name, seed)
            if algorithm == "bcd":
                report = bcd_minimize(
                    integrand, bands, grid, epsilon, rule,
                    max_iter=max_iter, A0=A0, threads=threads, keep_trace=False,
                )
            else:
                report = prox_minimize(
                    integrand, bands, grid, epsilon, rule,
                    max_outer=max_outer, rho=rho, A0=A0,
                    inner_max_iter=max_iter, threads=threads,
                )
            iterations.append(report.coordinate_steps)
            converged += report.status is Status.CONVERGED
        elapsed = time.perf_counter() - started
        rows.append(
            {
                "rule": rule_name,
                "runs": len(rule_seeds),
                "converged": converged,
                "iterations_mean": float(np.mean(iterations)),
                "iterations_min": int(np.min(iterations)),
                "iterations_max": int(np.max(iterations)),
                "wall_time_mean_s": elapsed / len(rule_seeds),
            }
        )
    return rows


def run_compare_rules(config_path, output_dir=None, threads: int = 1, quiet: bool = False) -> int:
    """Compare the selection rules on one configured problem; writes rules.csv."""
    config = load_config(config_path)
    out_dir = Path(output_dir if output_dir is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_seed = config.seed if config.seed is not None else 0
    seeds = [base_seed + i for i in range(config.compare_runs)]
    rows = compare_rules(
        config.integrand, config.bands, config.grid, config.epsilon,
        algorithm=config.algorithm, seeds=seeds, max_iter=config.max_iter,
        max_outer=config.max_outer, rho=config.rho,
        A0=_initial_weights(config), threads=threads,
    )
    header = [
        "rule", "runs", "converged",
        "iterations_mean", "iterations_min", "iterations_max", "wall_time_mean_s",
    ]
    csv_rows = [
        [
            row["rule"], str(row["runs"]), str(row["converged"]),
            _fmt(row["iterations_mean"]), str(row["iterations_min"]),
            str(row["iterations_max"]), _fmt(row["wall_time_mean_s"]),
        ]
        for row in rows
    ]
    _write_csv(out_dir / "rules.csv", header, csv_rows)
    if not quiet:
        for row in rows:
            print(
                f"{row['rule']}: runs={row['runs']} converged={row['converged']} "
                f"steps mean={row['iterations_mean']:.1f} "
                f"min={row['iterations_min']} max={row['iterations_max']}"
            )
    return EXIT_OK


def run_verify(config_path, output_dir=None, threads: int = 1, quiet: bool = False) -> int:
    """Cross-check the configured solver against the projected-gradient reference."""
    config = load_config(config_path)
    out_dir = Path(output_dir if output_dir is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _solve(config, threads)
    if report.status is not Status.CONVERGED:
        if not quiet:
            print(f"solver did not converge ({report.status.value}); nothing to verify")
        return _STATUS_EXIT[report.status]
    reference = projected_gradient_reference(
        config.integrand, config.bands, config.grid,
        steps=config.verify_steps, step_size=config.verify_step_size,
    )
    solver_objective = discrete_objective(config.integrand, report.A, config.grid)
    oracle_objective = discrete_objective(config.integrand, reference, config.grid)
    denom = max(abs(solver_objective), abs(oracle_objective), 1e-30)
    relative = abs(solver_objective - oracle_objective) / denom
    agree = relative <= config.verify_tolerance
    with open(out_dir / "verify.json", "w") as handle:
        json.dump(
            {
                "solver_objective": solver_objective,
                "oracle_objective": oracle_objective,
                "relative_difference": relative,
                "tolerance": config.verify_tolerance,
                "agree": agree,
            },
            handle,
            indent=2,
        )
        handle.write("\n")
    if not quiet:
        print(
            f"solver={solver_objective:.12g} oracle={oracle_objective:.12g} "
            f"relative={relative:.3e} -> {'agree' if agree else 'MISMATCH'}"
        )
    return EXIT_OK if agree else EXIT_VERIFY_MISMATCH


def _resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("BANDMIN_THREADS")
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise ConfigError(f"BANDMIN_THREADS must be an integer, got {env!r}")
        else:
            value = 1
    if value < 0:
        raise ConfigError("thread count must be nonnegative")
    if value == 0:
        value = os.cpu_count() or 1
    return value


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bandmin",
        description="Minimize convex functionals of densities under band constraints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve one configured problem"),
        ("compare-rules", "compare coordinate selection rules"),
        ("verify", "cross-check the solver against the reference oracle"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="path to a JSON run configuration")
        cmd.add_argument("--output-dir", default=None, help="override the config output_dir")
        cmd.add_argument(
            "--threads", type=int, default=None,
            help="worker threads for per-point inversion (0 = auto; "
                 "falls back to BANDMIN_THREADS, then 1)",
        )
        cmd.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    runners = {
        "solve": run_solve,
        "compare-rules": run_compare_rules,
        "verify": run_verify,
    }
    try:
        threads = _resolve_threads(args.threads)
        return runners[args.command](
            args.config, output_dir=args.output_dir, threads=threads, quiet=args.quiet
        )
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
