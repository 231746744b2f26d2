"""Exception types shared across the package."""


class RiscastError(Exception):
    """Base class for errors raised by riscast."""


class ConfigError(RiscastError):
    """A configuration file or option set is malformed or inconsistent."""


class InvalidGeometryError(RiscastError, ValueError):
    """A link geometry has a non-physical distance or reference."""


class DegenerateFeatureError(RiscastError, ValueError):
    """A feature column has zero variance and cannot be z-scored."""


class InsufficientDataError(RiscastError, ValueError):
    """Not enough samples to build the requested windows or splits."""


class DivergenceError(RiscastError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class CheckpointError(RiscastError):
    """A checkpoint file is corrupt, truncated, or incompatible."""
