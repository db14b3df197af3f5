"""Exception hierarchy shared by all rivalfit modules."""


class RivalfitError(Exception):
    """Base class for all rivalfit errors."""


class InvalidModelError(RivalfitError, ValueError):
    """Feature-set description violates its contract (e.g. n = 0, bad indices)."""


class InvalidStrategyError(RivalfitError, ValueError):
    """Coefficient map does not match the player's feature set."""


class InvalidRegimeError(RivalfitError, ValueError):
    """Knowledge fractions violate 0 <= g12 <= min(g1, g2), g12 >= g1 + g2 - 1."""


class InvalidConfigError(RivalfitError, ValueError):
    """Search/CLI configuration violates a precondition."""


class NotPositiveSemidefiniteError(RivalfitError, ValueError):
    """Covariance matrix has an eigenvalue below the PSD tolerance."""


class NumericalFailureError(RivalfitError, RuntimeError):
    """An eigensolver or factorization failed to converge."""


class CapacityError(RivalfitError, ValueError):
    """Exhaustive enumeration would exceed the state-space guard."""
