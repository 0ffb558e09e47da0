"""Exception types shared across the package.

Every error raised by the library derives from :class:`FivaError`, so CLI
and pipeline code can catch one base class and map it to a data-error exit.
"""


class FivaError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(FivaError):
    """Vector or matrix dimensions are inconsistent or too small."""


class ZeroVector(FivaError):
    """A vector with (near-)zero norm cannot be projected onto the sphere."""


class NotUnitNorm(FivaError):
    """An embedding entering a spherical operation is not unit length."""


class AntipodalPair(FivaError):
    """Spherical interpolation between opposite vectors is undefined."""


class EmptyList(FivaError):
    """An operation that needs at least one element got none."""


class TooFewMeans(FivaError):
    """Anchor construction needs at least two mean embeddings."""


class EmptyAnchorSet(FivaError):
    """Sampling requested from an anchor set with no anchors."""


class EmptyGallery(FivaError):
    """Retrieval requested against a gallery with no entries."""


class ShapeMismatch(FivaError):
    """Two arrays that must share a shape do not."""


class NonFinite(FivaError):
    """Input contains NaN or infinite values."""


class MissingLabels(FivaError):
    """An embedding file without labels was used where labels are required."""


class BadMagic(FivaError):
    """A binary file does not start with the expected magic bytes."""


class Truncated(FivaError):
    """A binary file ends before its declared payload does."""


class LabelCountMismatch(FivaError):
    """A label block does not line up with the declared embedding count."""


class UnsupportedFormat(FivaError):
    """A file is recognizable but uses an unsupported variant or encoding."""


class IoFailure(FivaError):
    """Reading or writing a file failed at the OS level."""


class CorruptState(FivaError):
    """A persisted tracker state file is malformed or violates invariants."""


class ConfigError(FivaError):
    """A configuration file could not be parsed or has the wrong shape."""
