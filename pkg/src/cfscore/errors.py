"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`CFScoreError`
so callers (and the command line) can separate user-facing failures from bugs.
"""


class CFScoreError(Exception):
    """Base class for all package errors."""


class ValidationError(CFScoreError, ValueError):
    """Input data violates a dataset invariant."""


class EmptyDataset(ValidationError):
    pass


class PresentScoreOnAbstention(ValidationError):
    pass


class MissingScoreOnPrediction(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ScoreRangeViolation(ValidationError):
    pass


class ExpertAlignmentError(ValidationError):
    pass


class LabelOutOfRange(ValidationError):
    pass


class InvalidProbabilities(ValidationError):
    pass


class MissingScore(ValidationError):
    pass


class FittingError(CFScoreError):
    """A nuisance learner could not be fitted."""


class TooFewSamples(FittingError):
    pass


class SingularSystem(FittingError):
    pass


class BadFoldCount(CFScoreError, ValueError):
    pass


class InsufficientObservedRows(FittingError):
    pass


class StudyRunError(CFScoreError):
    """A Monte Carlo run failed; carries the index of the failing run."""

    def __init__(self, run_index, cause):
        super().__init__(f"run {run_index} failed: {cause!r}")
        self.run_index = run_index
        self.cause = cause
