"""Exception hierarchy."""


class PolsarError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrixError(PolsarError, ArithmeticError):
    pass


class NotPositiveDefiniteError(PolsarError, ArithmeticError):
    pass


class NumericalError(PolsarError, ArithmeticError):
    pass


class DomainError(PolsarError, ValueError):
    pass


class EmptySampleError(PolsarError, ValueError):
    pass


class NonIntegerLooksError(PolsarError, ValueError):
    pass


class LooksMismatchError(PolsarError, ValueError):
    pass


class BetaOutOfRangeError(PolsarError, ValueError):
    pass


class UnknownClassError(PolsarError, KeyError):
    pass


class MismatchedSegmentsError(PolsarError, ValueError):
    pass


class NegativeIntensityError(PolsarError, ValueError):
    pass


class DimensionMismatchError(PolsarError, ValueError):
    pass


class DegenerateMarginalsError(PolsarError, ValueError):
    pass


class ZeroVarianceError(PolsarError, ValueError):
    pass


class PaletteMissingClassError(PolsarError, KeyError):
    pass


class FormatError(PolsarError, ValueError):
    """Malformed input file; the message carries the offending line or offset."""
