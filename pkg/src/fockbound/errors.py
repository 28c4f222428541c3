"""Exception hierarchy shared by the symbolic and numeric engines."""


class FockboundError(Exception):
    pass


class ValidationError(FockboundError, ValueError):
    """Invalid input: bad weights, non-unitary matrix, malformed word."""


class CapacityError(FockboundError):
    """Requested truncation is too large to enumerate."""


class TrustError(FockboundError):
    """An operation needs more certified depth than the operand carries."""


class ConvergenceError(FockboundError):
    """An iterated limit did not stabilize within the allowed steps."""


class FactorizationError(FockboundError):
    pass


class BasisError(FockboundError):
    """A spanning family is numerically singular."""


class ConfigError(FockboundError, ValueError):
    pass
