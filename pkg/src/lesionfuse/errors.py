"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
LeakageError -> 4.
"""


class LesionFuseError(Exception):
    """Base class for all package errors."""


class ConfigError(LesionFuseError):
    """Invalid configuration, flags, or hyperparameter ranges."""


class DataError(LesionFuseError):
    """Malformed input data (manifests, rasters, stores, shapes)."""


class CubeFormatError(DataError):
    """Raster file violates the HSC1 container format."""


class BadMagicError(CubeFormatError):
    """Leading magic bytes are not the expected tag."""


class BandCountError(CubeFormatError):
    """Header declares a band count other than 31."""


class TruncatedCubeError(CubeFormatError):
    """Payload is shorter than the header promises."""


class EmbeddingFormatError(DataError):
    """Embedding file violates the EMB1 container format."""


class ManifestError(DataError):
    """Manifest rows fail validation."""


class StoreError(DataError):
    """Feature store or model bundle file is malformed."""


class LeakageError(LesionFuseError):
    """A patient appears on both sides of a train/evaluation boundary."""
