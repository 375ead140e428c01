"""Exception types shared across the package."""


class WhiskerlocError(Exception):
    """Base class for all package errors."""


class InvalidConfigError(WhiskerlocError):
    """A configuration violates one of its invariants."""


class MarkerOutOfBoundsError(WhiskerlocError):
    """A displaced marker would leave the image bounds."""


class TrackingError(WhiskerlocError):
    """Marker tracking failed (count mismatch or ambiguous assignment)."""


class SeriesAssemblyError(WhiskerlocError):
    """Series assembly aborted; the message names the offending frame."""


class ShapeMismatchError(WhiskerlocError):
    """Two series (or a series and a model) disagree on shape."""


class SeriesFormatError(WhiskerlocError):
    """A series file does not conform to the on-disk format."""


class MissingClassError(WhiskerlocError):
    """Training data does not cover every location class."""


class InsufficientRunsError(WhiskerlocError):
    """Cross-validation needs at least two runs per class."""


class DegenerateEvidenceError(WhiskerlocError):
    """All per-class log likelihoods are -inf; the update is undefined."""


class DataError(WhiskerlocError):
    """A dataset on disk is inconsistent with its manifest."""
