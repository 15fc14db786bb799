"""Exception types shared across the package."""


class RomboxError(Exception):
    """Base class for all errors raised by this package."""


class GridError(RomboxError):
    """Invalid grid parameters (too few cells, non-positive extent, ...)."""


class VelocityError(RomboxError):
    """Velocity field violates the discrete divergence-free requirement."""


class LayoutError(RomboxError):
    """Subdomain layout cannot be built (non-divisible counts, bad overlap)."""


class KernelError(RomboxError):
    """Blending kernel is not applicable to the requested layout."""


class DimensionError(RomboxError):
    """Operands have incompatible shapes or dimensionality."""


class SplitError(RomboxError):
    """Snapshot split boundaries are inconsistent with the stored times."""


class EmptySelectionError(RomboxError):
    """A snapshot selection matched no columns."""


class FormatError(RomboxError):
    """A binary snapshot or basis file is malformed.

    Carries the byte offset at which decoding failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class FactorizationError(RomboxError):
    """A required matrix factorization failed (singular or not SPD)."""


class DegenerateBasisError(RomboxError):
    """Requested modes include an exactly-zero singular value."""


class UndefinedMetricError(RomboxError):
    """A relative metric was requested against a zero-norm reference."""


class ConfigError(RomboxError):
    """Experiment configuration is invalid."""
