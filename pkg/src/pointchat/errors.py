"""Exception hierarchy shared across the engine.

Every error the engine raises on purpose derives from PointChatError so the
service layer can map them to HTTP statuses in one place.
"""

from __future__ import annotations


class PointChatError(Exception):
    """Base class for all engine errors."""


# --- pointing ---------------------------------------------------------------

class EmptyTrace(PointChatError):
    """A gesture arrived with no samples."""


class UnknownTarget(PointChatError):
    """The gesture's target artifact id is not in the session."""


class DragWithoutSelection(PointChatError):
    """A drag was classified or forced but the session has no active mask."""


# --- perception -------------------------------------------------------------

class SeedOutOfBounds(PointChatError):
    """Segmentation seed lies outside the image."""


# --- session ----------------------------------------------------------------

class UnknownSession(PointChatError):
    """No session with that id."""


class UnknownArtifact(PointChatError):
    """No artifact with that id in the session."""


class HashCollision(PointChatError):
    """Two distinct byte payloads produced the same content-hash prefix."""


class TurnInFlight(PointChatError):
    """Another turn is already being processed for this session."""


# --- toolkit ----------------------------------------------------------------

class DuplicateName(PointChatError):
    """A tool with that name is already registered."""


class DimensionMismatch(PointChatError):
    """Mask dimensions do not match the image."""


class EmptyMask(PointChatError):
    """The mask has no selected pixel."""


class EmptyComplement(PointChatError):
    """The mask covers the whole image, leaving no known pixels to fill from."""


class NothingToGenerate(PointChatError):
    """Generation was requested with no draft and no (image, mask) pair."""


class TimestampOutOfRange(PointChatError):
    """Requested timestamp lies outside the video's duration."""


class MalformedManifest(PointChatError):
    """Video manifest is missing fields or references missing frames."""


class ToolUnavailable(PointChatError):
    """External tool endpoint timed out or answered non-2xx."""


class MalformedResponse(PointChatError):
    """External tool answered 2xx but the payload does not follow the protocol."""


# --- controller -------------------------------------------------------------

class EmptyUtterance(PointChatError):
    """The utterance is empty after trimming."""


class ClarifyNeeded(PointChatError):
    """A clause could not be matched to any tool; carries the question to ask."""

    def __init__(self, clause: str, question: str):
        super().__init__(question)
        self.clause = clause
        self.question = question


class MissingArgument(PointChatError):
    """A required argument could not be resolved from any source."""

    def __init__(self, arg_name: str, tool_name: str):
        super().__init__(f"missing argument '{arg_name}' for tool '{tool_name}'")
        self.arg_name = arg_name
        self.tool_name = tool_name

    @property
    def question(self) -> str:
        return f"I need a value for '{self.arg_name}' to run {self.tool_name}. Can you point at it or name it?"


class InvalidArgument(PointChatError):
    """An argument failed validation and could not be corrected."""

    def __init__(self, arg_name: str, reason: str):
        super().__init__(f"invalid argument '{arg_name}': {reason}")
        self.arg_name = arg_name
        self.reason = reason


# --- harness ----------------------------------------------------------------

class MalformedTrace(PointChatError):
    """A trace line is not a valid step."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"trace line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class EmptyCorpus(PointChatError):
    """The corpus directory holds no trace files."""
