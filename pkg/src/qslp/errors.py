"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DegenerateStatisticsError(ValueError):
    """A ratio estimator has a zero or negative denominator."""


class NumericalError(FloatingPointError):
    """The integrator produced a non-finite value.

    ``t``, ``z_index`` and ``variable`` locate the first bad sample;
    ``last_state`` holds the last state that was still finite.
    """

    def __init__(self, t, z_index, variable, last_state=None):
        self.t = t
        self.z_index = z_index
        self.variable = variable
        self.last_state = last_state
        super().__init__(
            f"non-finite value in {variable} at t={t:.6e} s, z-index {z_index}"
        )
