"""Exception types shared across the package."""


class TrackFormatError(ValueError):
    """Raised when a track file cannot be parsed."""


class TrackValidationError(ValueError):
    """Raised when loaded geometry violates a track invariant."""


class ConfigurationError(ValueError):
    """Raised for invalid or inconsistent configuration values."""


class EpisodeProtocolError(RuntimeError):
    """Raised when the reset/step calling contract is violated."""
