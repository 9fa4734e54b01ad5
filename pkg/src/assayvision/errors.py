"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class AssayVisionError(Exception):
    """Base class for all errors raised by assayvision."""


class DimensionMismatch(AssayVisionError, ValueError):
    pass


class ImageIOError(AssayVisionError, OSError):
    pass


class UnsupportedFormat(AssayVisionError, ValueError):
    pass


class InvalidParams(AssayVisionError, ValueError):
    pass


class InvalidSigma(InvalidParams):
    pass


class InvalidSpec(AssayVisionError, ValueError):
    pass


class EmptyMask(AssayVisionError, ValueError):
    pass


class InsufficientAssays(AssayVisionError):
    """Fewer assay regions were detected than the pipeline expects.

    ``image`` names the capture (``"base"``/``"exposed"``) when known.
    """

    def __init__(self, found: int, expected: int, image: str | None = None):
        self.found = found
        self.expected = expected
        self.image = image
        where = f" in {image} image" if image else ""
        super().__init__(f"found {found} assay(s){where}, expected {expected}")
