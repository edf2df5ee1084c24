"""Exception hierarchy shared across the toolkit."""


class SoftspaceError(Exception):
    """Base class for all softspace errors."""


class MalformedRecord(SoftspaceError):
    """A log record could not be parsed (strict mode only)."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class IoFailure(SoftspaceError):
    """Input could not be read or output could not be written."""


class UnknownModule(SoftspaceError):
    """A call edge references a module absent from the zone list."""


class EmptySpace(SoftspaceError):
    """No module was executed; there are no zones to analyze."""


class EmptyWeights(SoftspaceError):
    """The proximity matrix has no nonzero entries (S0 = 0)."""


class DegenerateVariance(SoftspaceError):
    """All execution counts are equal; autocorrelation is undefined."""


class NonpositiveM(SoftspaceError):
    """The per-zone literal normalization constant is not positive."""


class TooFewZones(SoftspaceError):
    """The operation needs more zones than the dataset provides."""


class ZeroVariance(SoftspaceError):
    """A z-score was requested for a zone with zero null variance."""


class SynthError(SoftspaceError):
    """Synthetic trace parameters are inconsistent or infeasible."""
