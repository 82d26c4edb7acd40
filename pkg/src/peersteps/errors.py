"""Exception hierarchy shared across the platform."""


class PeerStepsError(Exception):
    """Base class for all library errors."""


class DomainError(PeerStepsError):
    """A value or operation violates a domain rule (bad Likert, bad day index, ...)."""


class ValidationError(PeerStepsError):
    """Malformed input: wrong type, out-of-range value, unknown reference."""


class SequencingError(PeerStepsError):
    """A session event arrived out of order for the current session state."""


class ConflictError(PeerStepsError):
    """The operation was already performed (duplicate select, double finalize...)."""


class NotFoundError(PeerStepsError):
    """Referenced participant or session does not exist."""


class ConfigError(PeerStepsError):
    """Configuration file or attribute pool is unusable."""
