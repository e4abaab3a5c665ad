"""Exception types shared across the pipeline.

The distinction between :class:`InvalidAnnotationError` (bad input, callers
should fail loudly) and the two degeneracy errors (recoverable: the pipeline
falls back to a blank mask) is load-bearing for batch runs.
"""


class SkinfuseError(Exception):
    """Base class for all skinfuse errors."""


class ImageDecodeError(SkinfuseError):
    """A PNG file could not be read or has an unsupported layout."""


class InvalidAnnotationError(SkinfuseError):
    """Eye coordinates are degenerate or outside the image bounds."""


class EmptyFaceSampleError(SkinfuseError):
    """Every pixel of the face ellipse was removed as edge texture."""


class DegenerateModelError(SkinfuseError):
    """Too few or spread-free sample pixels to fit a skin model."""
