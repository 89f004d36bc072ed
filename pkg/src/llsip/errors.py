"""Exception hierarchy shared by all submodules."""


class LLSError(Exception):
    """Base class for every error raised by the package."""


class RankDeficient(LLSError, ValueError):
    pass


class DegenerateBasis(LLSError, ValueError):
    pass


class TooLarge(LLSError, ValueError):
    """A brute-force oracle was asked to enumerate beyond its size guard."""


class SeparatedPair(LLSError, ValueError):
    pass


class IndependentColumn(LLSError, ValueError):
    pass


class EmptyGraph(LLSError, ValueError):
    pass


class NegativeCycle(LLSError, RuntimeError):
    pass


class NotInProjection(LLSError, ValueError):
    pass


class OrderingAmbiguous(LLSError, RuntimeError):
    pass


class SingularSystem(LLSError, RuntimeError):
    pass


class InvalidPartition(LLSError, ValueError):
    pass


class NumericalBreakdown(LLSError, RuntimeError):
    pass


class RoundingFailed(LLSError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class NeighborhoodViolation(LLSError, ValueError):
    pass


class SearchLimit(LLSError, RuntimeError):
    pass


class NonMonotoneMu(LLSError, ValueError):
    pass


class ParseError(LLSError, ValueError):
    pass


class DimensionMismatch(LLSError, ValueError):
    pass
