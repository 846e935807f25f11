"""Exception hierarchy.

Every error raised on bad input derives from :class:`WaveMeshError`, which is
itself a :class:`ValueError`, so callers that already catch ``ValueError`` keep
working.
"""


class WaveMeshError(ValueError):
    """Base class for all input errors raised by this package."""


class NonDyadicLength(WaveMeshError):
    pass


class NonDyadicK(NonDyadicLength):
    """Mesh size is not a power of two."""


class InvalidLevel(WaveMeshError):
    pass


class UnknownWavelet(WaveMeshError):
    pass


class OutOfDomain(WaveMeshError):
    pass


class DimensionMismatch(WaveMeshError):
    pass


class EmptyMatrix(WaveMeshError):
    pass


class LayoutMismatch(WaveMeshError):
    pass


class InvalidPenalty(WaveMeshError):
    pass


class InvalidLabels(WaveMeshError):
    pass


class ConstantResponse(WaveMeshError):
    pass


class TooFewObservations(WaveMeshError):
    pass


class DegenerateScale(WaveMeshError):
    pass


class InvalidScenario(WaveMeshError):
    pass


class InvalidConfig(WaveMeshError):
    pass


class ModelFormatError(WaveMeshError):
    pass


class CsvFormatError(WaveMeshError):
    """Malformed or non-finite CSV input."""
