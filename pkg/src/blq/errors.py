"""Exception types shared across the library."""


class BLQError(Exception):
    """Base class for all library errors."""


class DatumError(BLQError, ValueError):
    """Invalid Brascamp-Lieb datum (bad shapes, non-surjective map, ...)."""


class ParameterDomainError(BLQError, ValueError):
    """Adjoint exponent parameters outside their admissible domain."""


class ScalingConditionError(BLQError, ValueError):
    """The dimensional scaling condition d = sum(c_i * d_i) fails."""


class ConditioningError(BLQError, ArithmeticError):
    """A linear-algebra step hit a numerically singular matrix."""


class CoverageError(BLQError, ValueError):
    """A pushforward image escapes the target grid box."""

    def __init__(self, message, escaping_fraction=None):
        super().__init__(message)
        self.escaping_fraction = escaping_fraction


class ResolutionError(BLQError, ValueError):
    """A grid quadrature self-estimate exceeds the allowed share of the value."""


class CapExceededError(BLQError, ValueError):
    """An enumeration exceeds its configured size cap."""


class MassError(BLQError, ValueError):
    """Zero or non-finite total mass where a density is required."""


class SchemaError(BLQError, ValueError):
    """A scenario or report violates its JSON schema."""
