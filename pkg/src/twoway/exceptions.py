"""Exception hierarchy.

All errors derive from :class:`ValueError` so callers used to the
scikit-learn convention can keep catching that.
"""


class TwoWayError(ValueError):
    """Base class for every error raised by this package."""


class ParameterError(TwoWayError):
    """An argument is outside its admissible range."""


class DataError(TwoWayError):
    """Input data violates a precondition (non-finite, negative, zero line...)."""


class StructuralError(TwoWayError):
    """Shapes or ranks are inconsistent with the requested operation."""


class NoStructureError(StructuralError):
    """The matrix has no protruding singular values to build on."""
