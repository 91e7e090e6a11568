"""Exception types shared across the library."""


class TcsError(Exception):
    """Base class for all tcsylv errors."""


class DimensionError(TcsError, ValueError):
    """Operands have incompatible or unexpected dimensions."""


class UnsupportedShape(TcsError, ValueError):
    """Problem matrices are not square; only square problems are supported."""


class CapacityError(TcsError):
    """A dense operator would exceed the configured size cap."""


class SingularMatrix(TcsError):
    """A matrix that must be nonsingular is singular to pivot tolerance."""


class SingularOperator(TcsError):
    """An assembled linear operator is singular to tolerance.

    ``kind`` sub-classifies the failure when known:
    ``"consistent-underdetermined"`` (solutions exist but are not unique)
    or ``"inconsistent"`` (no solution).
    """

    def __init__(self, message, kind=None):
        super().__init__(message)
        self.kind = kind


class NoUniqueSolution(SingularOperator):
    """The original equation itself has no unique solution."""


class NotConvergent(TcsError):
    """An iterative solver failed to reach the requested tolerance."""


class SpuriousSolution(TcsError):
    """The reduced equation was solved, but the candidate fails the
    original equation.  The failed report is attached for inspection."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParseError(TcsError, ValueError):
    """Malformed matrix file.  Carries the offending 1-based line number."""

    def __init__(self, line, message):
        super().__init__("line %d: %s" % (line, message))
        self.line = line
