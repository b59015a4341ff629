"""Exception types shared across the engine."""

from __future__ import annotations


class XTalkError(Exception):
    """Base class for all engine errors."""


# --- event bus ---------------------------------------------------------


class UnknownSession(XTalkError):
    """Event published for a session that does not exist or was closed."""


class DuplicateSubscriber(XTalkError):
    """A subscriber id was registered twice within one session scope."""


class SessionClosed(XTalkError):
    """Dequeue attempted on a subscription whose session has closed."""


# --- wire protocol -----------------------------------------------------


class MalformedFrame(XTalkError):
    """Frame could not be parsed: bad JSON, unknown tag, odd PCM length."""


class SequenceRegression(XTalkError):
    """Client sequence number did not strictly increase."""


class NotClientVisible(XTalkError):
    """Internal event kind must never be encoded onto the wire."""


# --- session runtime ----------------------------------------------------


class OverCapacity(XTalkError):
    """Session limiter is at max_sessions; new session rejected."""


class InvalidConfig(XTalkError):
    """Pipeline state requested with an invalid configuration."""


# --- model backends -----------------------------------------------------


class BackendFailure(XTalkError):
    """A model backend call failed; callers degrade rather than abort."""


class UntaggedAudio(XTalkError):
    """Mock recognizer received audio without a sidecar tag."""


class EmptyText(XTalkError):
    """Synthesis requested for empty text."""


class ToolFailure(XTalkError):
    """Tool execution failed; the error text becomes the tool output."""


class UnknownVoice(XTalkError):
    """Timbre switch requested a voice that is not registered."""


class UnknownEmotion(XTalkError):
    """Emotion switch requested a tag outside the configured set."""


class TurnCancelled(XTalkError):
    """Work was submitted for a turn that has already been cancelled."""


class ZeroVector(XTalkError):
    """Embedding blend collapsed to numerical zero."""


# --- telemetry ----------------------------------------------------------


class DuplicateMark(XTalkError):
    """A trace point was stamped twice for the same turn."""


class IncompleteTrace(XTalkError):
    """Latency computation requires trace points that are absent."""


class ScenarioMissing(XTalkError):
    """Referenced scenario file or corpus entry does not exist."""


# --- cli ----------------------------------------------------------------


class ConfigError(XTalkError):
    """Configuration file failed validation; message names the key."""

    def __init__(self, key: str, detail: str) -> None:
        super().__init__(f"config key {key!r}: {detail}")
        self.key = key
        self.detail = detail


class BindError(XTalkError):
    """Server could not bind the requested listen address."""
