"""Exception types shared across the relfluid modules.

Every error raised on purpose by the toolkit derives from ``RelfluidError`` so the
CLI can turn it into a machine-readable message with a non-zero exit code.
"""


class RelfluidError(Exception):
    """Base class for all toolkit errors."""


class DomainError(RelfluidError, ValueError):
    """A thermodynamic state lies outside the equation-of-state domain."""


class DivisionByZero(RelfluidError, ZeroDivisionError):
    """A quantity that requires a nonzero denominator was requested at zero."""


class InsufficientSamples(RelfluidError):
    """Too few samples were supplied for a finite-difference estimate."""


class NoTimelikeCompletion(RelfluidError):
    """No future-pointing unit timelike vector has the given spatial part."""


class NotNormalized(RelfluidError):
    """A four-velocity fails the normalization u.u = -1."""


class DegenerateSoundSpeed(RelfluidError):
    """The sound speed vanishes or is negative where a metric needs it."""


class NonHyperbolic(RelfluidError):
    """Roots of a characteristic polynomial are not real."""


class DegenerateDirection(RelfluidError):
    """The chosen covector makes the leading coefficient vanish."""


class ConstraintViolation(RelfluidError):
    """Shear tensor constraints are violated beyond tolerance."""


class InternalError(RelfluidError):
    """A self-check that should never fail did fail."""


class PreconditionFailed(RelfluidError):
    """Hypotheses of a causality theorem are not met by the input."""


class ConsistencyError(RelfluidError):
    """Sufficient conditions passed while necessary conditions failed."""


class SchemaError(RelfluidError):
    """Malformed input file or record."""


class ConfigError(RelfluidError):
    """Invalid run configuration."""


class GridTooCoarse(RelfluidError):
    """A grid axis has too few points for the requested stencil."""


class GridTooLarge(RelfluidError):
    """A pairwise evaluation exceeds the configured size cap."""


class MissingTemperature(RelfluidError):
    """The equation of state does not supply the temperature closure."""


class MissingClosure(RelfluidError):
    """A coefficient closure needed by a residual was not supplied."""


class SuperluminalInput(RelfluidError):
    """A three-velocity with magnitude of at least one was supplied."""


class Con2PrimFailure(RelfluidError):
    """The conserved-to-primitive inversion did not converge."""


class CFLViolation(RelfluidError):
    """The requested time step exceeds the CFL bound."""


class CausalityBreach(RelfluidError):
    """The effective viscous signal speed exceeds the speed of light."""


class NegativeDensity(RelfluidError, ValueError):
    """A negative energy density was supplied."""


class LostPositivity(RelfluidError):
    """The coefficient a0 of the vacuum system is not positive."""


class InadmissibleSigma(RelfluidError, ValueError):
    """A weight exponent is not larger than -1/2."""


class InsufficientTimeLevels(RelfluidError):
    """Fewer than three time levels were given for time derivatives."""


class KappaMismatch(RelfluidError, ValueError):
    """Two vacuum states use different equation-of-state exponents."""
