"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: grids, bands, weights, or solver settings."""


class EvaluationError(RuntimeError):
    """An objective or subderivative produced NaN where a finite value was required."""


class NormalizationError(RuntimeError):
    """The scalar search for a unit-mass level failed.

    Carries the density index and the best mass that was achieved, so the
    solver can surface a stall diagnostic instead of a bare failure.
    """

    def __init__(self, density: int, achieved_mass: float):
        self.density = density
        self.achieved_mass = achieved_mass
        super().__init__(
            f"could not normalize density {density}: "
            f"closest achievable mass was {achieved_mass!r}"
        )


class OracleFailure(RuntimeError):
    """The reference solver diverged; its iterate must not be trusted."""
