"""Exception types shared across the package.

Plain ``ValueError`` is used for simple argument validation; the classes
here exist where callers need to distinguish failure modes or where the
error must carry structured context (step index, offending ids, ...).
"""


class PhasecrashError(Exception):
    """Base class for package-specific failures."""


class GenerationError(PhasecrashError):
    """Noise synthesis failed (e.g. covariance not positive definite)."""

    def __init__(self, message, schedule=None):
        super().__init__(message)
        self.schedule = schedule


class SimulationOverflowError(PhasecrashError):
    """Simulated state became non-finite; ``step`` is the failing index."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class DegenerateDesignError(PhasecrashError):
    """Least-squares design matrix is rank deficient or ill conditioned."""


class FitFailureError(PhasecrashError):
    """No usable node in the calibration search grid."""


class AlignmentError(PhasecrashError):
    """Series in a panel do not share timestamps; ``ids`` names offenders."""

    def __init__(self, message, ids=()):
        super().__init__(message)
        self.ids = tuple(ids)


class InsufficientDataError(PhasecrashError):
    """Too few observations for the requested statistic."""


class CsvParseError(PhasecrashError):
    """Input CSV is malformed; ``line`` is the 1-based offending line."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
