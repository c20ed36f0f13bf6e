"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class PhaseError(Exception):
    """Base class for all errors raised by :mod:`mixphase`."""

    exit_code = 1


class ValidationError(PhaseError, ValueError):
    exit_code = 2


class NotHermitian(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class NotPositive(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class GridMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class ProfileGridMismatch(GridMismatch):
    pass


class ClosureViolation(ValidationError):
    """A gauge profile whose end-to-end phase is not an integer multiple of 2*pi."""


class NotPeriodicGauge(ValidationError):
    pass


class StepOverlapVanishes(ValidationError):
    """Consecutive frame vectors are nearly orthogonal; the time grid is too coarse."""


class ClosureUndefined(ValidationError):
    pass


class ChartSingular(ValidationError):
    """The reference vector of a chart gauge becomes orthogonal to the frame."""


class TooFewSamples(ValidationError):
    pass


class DegenerateDesign(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class NonCyclicPath(PhaseError):
    exit_code = 3

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateSpectrum(PhaseError):
    exit_code = 4

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class PhaseIOError(PhaseError, OSError):
    exit_code = 5
