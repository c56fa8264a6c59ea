"""Exception types shared across the package."""


class RateFormError(Exception):
    """Base class for all rateform errors."""


class NonConvergence(RateFormError):
    """Iterative eigen-solver exceeded its sweep budget."""


class NotPositiveDefinite(RateFormError):
    """A tensor required to be SPD has an eigenvalue at or below the gate."""


class SingularF(RateFormError):
    """Deformation gradient with |det F| below the scale-aware threshold."""


class NewtonDivergence(RateFormError):
    """Inverse constitutive map failed to reach tolerance within budget."""


class LeftDomain(RateFormError):
    """A characteristic trajectory exited the grid bounding box."""


class NonFiniteVelocity(RateFormError):
    """Velocity callback returned NaN or Inf along a trajectory."""


class CflViolation(RateFormError):
    """Time step exceeds the advective CFL limit."""


class CgNonConvergence(RateFormError):
    """Conjugate gradient failed to reach tolerance within budget."""


class NearSingular(RateFormError):
    """6x6 inversion requested for a matrix with condition estimate > 1e12."""


class NoRichterForm(RateFormError):
    """Law does not expose Richter coefficients."""


class WitnessNotFound(RateFormError):
    """Counterexample search exhausted its budget without success."""


class ConfigError(RateFormError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Malformed config text; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownKey(ConfigError):
    """Config key not recognized for its section."""


class MissingRequired(ConfigError):
    """Config lacks a key required by the requested scenario."""
