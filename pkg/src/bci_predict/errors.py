"""Exception hierarchy for the analysis pipeline.

Two broad families matter for the CLI exit-code contract:
``DataError`` (malformed or inconsistent inputs, exit code 2) and
``NumericalError`` (a computation cannot produce a valid result, exit code 3).
"""


class PipelineError(Exception):
    """Base class for all package-specific errors."""


class DataError(PipelineError):
    """Input data failed validation."""


class NumericalError(PipelineError):
    """A numerical routine cannot produce a meaningful result."""


# --- ingest ---------------------------------------------------------------

class MissingChannel(DataError):
    pass


class RateMismatch(DataError):
    pass


class NonFiniteSample(DataError):
    pass


class MalformedHeader(DataError):
    pass


class OutOfRangeIndex(DataError):
    pass


class BadSequenceStructure(DataError):
    pass


class UnsortedEvents(DataError):
    pass


# --- preprocess -----------------------------------------------------------

class EdgeAboveNyquist(DataError):
    pass


class RecordingTooShortForFilter(DataError):
    pass


class WindowOutOfBounds(DataError):
    pass


class EmptyRecording(DataError):
    pass


class BaselineOutOfBounds(DataError):
    pass


class AllChannelsBad(DataError):
    pass


# --- features -------------------------------------------------------------

class EmptyEpochSet(DataError):
    pass


class BandOutsideSpectrum(DataError):
    pass


class MissingElectrode(DataError):
    pass


class EpochTooShortForBand(DataError):
    pass


class TooFewEpochs(DataError):
    pass


class ShapeMismatch(DataError):
    pass


# --- classify -------------------------------------------------------------

class WrongEpochLength(DataError):
    pass


class SingleClass(DataError):
    pass


class Degenerate(NumericalError):
    pass


class MissingSequences(DataError):
    pass


class NoTrials(DataError):
    pass


# --- stats ----------------------------------------------------------------

class ConstantInput(NumericalError):
    pass


class LengthMismatch(DataError):
    pass


class TooFewSubjects(DataError):
    pass


class SubjectMismatch(DataError):
    pass


# --- synth ----------------------------------------------------------------

class InvalidSpec(DataError):
    pass
