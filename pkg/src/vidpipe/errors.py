"""Exception hierarchy shared by every vidpipe module."""

from __future__ import annotations


class VidpipeError(Exception):
    """Base class for all library errors."""


# -- hyperparameter domains / search spaces ---------------------------------

class EmptySpace(VidpipeError, ValueError):
    pass


class OutOfDomain(VidpipeError, ValueError):
    pass


class MalformedSpace(VidpipeError, ValueError):
    """A search-space file or mapping could not be turned into domains."""


# -- pipeline language -------------------------------------------------------

class DuplicatePrimitive(VidpipeError, KeyError):
    pass


class UnknownPrimitive(VidpipeError, KeyError):
    pass


class MalformedSpec(VidpipeError, ValueError):
    pass


class UnknownKey(VidpipeError, KeyError):
    pass


class OutOfDomainValue(VidpipeError, ValueError):
    pass


class ValidationFailed(VidpipeError, ValueError):
    def __init__(self, report):
        self.report = report
        lines = "; ".join(f"{i.code}@{i.step_index}: {i.message}" for i in report.issues)
        super().__init__(lines or "validation failed")


class ArityMismatch(ValidationFailed):
    pass


class StepExecutionFailed(VidpipeError, RuntimeError):
    def __init__(self, step_index: int, cause: BaseException):
        self.step_index = step_index
        self.cause = cause
        super().__init__(f"step {step_index} failed: {type(cause).__name__}: {cause}")


class ParseError(VidpipeError, ValueError):
    def __init__(self, position, message: str):
        self.position = position
        self.message = message
        super().__init__(f"at {position}: {message}")


class SchemaVersionUnsupported(ParseError):
    pass


class CorruptArtifact(VidpipeError, ValueError):
    pass


# -- tuners ------------------------------------------------------------------

class EmptyHistory(VidpipeError, ValueError):
    pass


class OutOfUnitCube(VidpipeError, ValueError):
    pass


class ZeroBudget(VidpipeError, ValueError):
    pass


class NoCompleteTrials(VidpipeError, ValueError):
    pass


class AllTrialsFailed(NoCompleteTrials):
    pass


# -- primitives zoo ----------------------------------------------------------

class BadTargetIndex(VidpipeError, IndexError):
    pass


class RaggedRows(VidpipeError, ValueError):
    pass


class UnsupportedExtension(VidpipeError, ValueError):
    pass


class ZeroStd(VidpipeError, ValueError):
    pass


class ShapeMismatch(VidpipeError, ValueError):
    pass


class StaleCache(VidpipeError, RuntimeError):
    pass


class EmptyData(VidpipeError, ValueError):
    pass


class LabelOutOfRange(VidpipeError, ValueError):
    pass


class UnknownAlgorithm(VidpipeError, KeyError):
    pass


class MissingPretrainedPath(VidpipeError, ValueError):
    pass


# -- data io -----------------------------------------------------------------

class CorruptVideo(VidpipeError, ValueError):
    pass


class BadMagic(CorruptVideo):
    pass


class TruncatedPayload(CorruptVideo):
    pass


class UnsupportedChannels(CorruptVideo):
    pass


class TooFewRows(VidpipeError, ValueError):
    pass


class SingleRowClass(UserWarning):
    """A label with a single row cannot be split; the row stays in train."""
