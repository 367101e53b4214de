"""Exception types raised across the simulator."""


class MarnError(Exception):
    """Base class for all simulator errors."""


class ConfigError(MarnError, ValueError):
    """Invalid network, sweep or scheme configuration."""


class SingularMatrix(MarnError, ArithmeticError):
    """A Hermitian matrix was not numerically positive definite."""


class DegenerateChannel(MarnError, ArithmeticError):
    """A channel draw made a normalizing quantity underflow.

    Continuous fading makes this a measure-zero event. Batched code paths
    flag the offending trials in a boolean mask instead of raising; the
    harness discards and counts them.
    """


class HypothesisSpaceTooLarge(MarnError):
    """Exhaustive ML enumeration would exceed the configured guard."""


class InsufficientData(MarnError):
    """Not enough Monte Carlo events to support a fit."""
