"""Exception types raised across the package."""


class MixSDCAError(Exception):
    """Base class for package errors."""


class DimensionMismatch(MixSDCAError, ValueError):
    pass


class EtaOutOfRange(MixSDCAError, ValueError):
    pass


class TooFewExamples(MixSDCAError, ValueError):
    pass


class EmptyInterval(MixSDCAError, ValueError):
    """No u keeps both scaled conjugate arguments inside the domain."""


class DegenerateLevelSet(MixSDCAError, RuntimeError):
    pass


class ParseError(MixSDCAError, ValueError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class LabelDomainError(MixSDCAError, ValueError):
    pass


class DegenerateLabels(MixSDCAError, ValueError):
    """Only one class present where both are required."""
