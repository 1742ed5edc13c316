"""Exception types shared across the library."""


class AirjamError(Exception):
    """Base class for all library-specific errors."""


class DimensionMismatch(AirjamError):
    """Operands have incompatible dimensions."""


class NotPositiveDefinite(AirjamError):
    """A matrix required to be positive definite fails the pivot test.

    ``minor_index`` is the 0-based index of the first leading minor whose
    Cholesky pivot fell below the scale-aware threshold.
    """

    def __init__(self, message: str, minor_index: int | None = None):
        super().__init__(message)
        self.minor_index = minor_index


class InvalidDistribution(AirjamError):
    """Probability vector or transition matrix violates its invariants."""


class NonAbsolutelyContinuous(AirjamError):
    """Marginal density vanishes where the conditional density is positive."""


class DomainTooLarge(AirjamError):
    """Quadrature box truncates more probability mass than the oracle allows."""


class UnsupportedCombination(AirjamError):
    """No closed-form marginal for this channel/input pair; use Monte Carlo."""


class OutsideDomain(AirjamError):
    """A parameter probe lies outside the declared compact parameter set."""


class GridEmpty(AirjamError):
    """A parameter grid with no points was supplied."""


class SizeOverflow(AirjamError):
    """Requested codebook or enumeration exceeds the desk-scale caps."""


class NoFeasibleWord(AirjamError):
    """Cost constraint has violating words but no replacement word was given."""


class RateTooHigh(AirjamError):
    """Rate is not below the infimum mutual information of the family."""


class NonpositiveExponent(AirjamError):
    """Best achievable error exponent is not positive for these parameters."""


class InvalidLoss(AirjamError):
    """A loss value exceeded the declared maximum."""


class ConfigError(AirjamError):
    """Experiment configuration is malformed; message lists every problem."""
