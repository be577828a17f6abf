"""Exception types raised across the package.

Every error that callers are expected to catch subclasses
:class:`AffectPipeError`, grouped loosely by the layer that raises it.
"""


class AffectPipeError(Exception):
    """Base class for all package errors."""


# --- corpus ---------------------------------------------------------------

class CorpusError(AffectPipeError):
    pass


class MissingColumnError(CorpusError):
    def __init__(self, column, path=None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {column!r}{where}")


class NonUniformSamplingError(CorpusError):
    pass


class NonFiniteSampleError(CorpusError):
    def __init__(self, row, column=None, path=None):
        self.row = row
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        col = f" column {column!r}" if column else ""
        super().__init__(f"non-finite sample at row {row}{col}{where}")


class RangeViolationError(CorpusError):
    def __init__(self, row, value, path=None):
        self.row = row
        self.value = value
        where = f" in {path}" if path else ""
        super().__init__(
            f"rating {value} at row {row} outside [0.5, 9.5]{where}")


class OrphanFileError(CorpusError):
    pass


class MalformedNameError(CorpusError):
    pass


class InvalidSpecError(CorpusError):
    """Synthetic-dataset parameters are inconsistent."""


# --- dsp ------------------------------------------------------------------

class DspError(AffectPipeError):
    pass


class InvalidCutoffError(DspError):
    pass


class SignalTooShortError(DspError):
    pass


class WindowTooSmallError(DspError):
    pass


class InvalidWindowError(DspError):
    pass


class TooShortError(DspError):
    pass


# --- features -------------------------------------------------------------

class FeatureError(AffectPipeError):
    pass


class TooFewPeaksError(FeatureError):
    pass


class UnknownKindError(FeatureError):
    pass


class TimestampOutOfRangeError(FeatureError):
    pass


class DelayOutOfRangeError(FeatureError):
    pass


# --- scenarios ------------------------------------------------------------

class ScenarioError(AffectPipeError):
    pass


class EmptyInputError(ScenarioError):
    pass


class IncompleteIndexError(ScenarioError):
    pass


class NoMatchingModelError(ScenarioError):
    pass


# --- learners -------------------------------------------------------------

class LearnerError(AffectPipeError):
    pass


class ShapeMismatchError(LearnerError):
    pass


class EmptyMembersError(LearnerError):
    pass


class SchemaMismatchError(LearnerError):
    pass


# --- pipeline ---------------------------------------------------------------

class GroupTrainingError(AffectPipeError):
    """A model group failed to train; the message names the group."""


# --- evaluation -----------------------------------------------------------

class EvalError(AffectPipeError):
    pass


class LengthMismatchError(EvalError):
    pass


class EmptyListError(EvalError):
    pass


class EmptyFoldError(EvalError):
    pass


# --- cli / config ---------------------------------------------------------

class ConfigError(AffectPipeError):
    pass
