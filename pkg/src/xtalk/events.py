"""Centralized event bus: typed events, publish-subscribe, priority routing.

Every component communicates through this bus. Control signals (pause,
resume, flush, stop, interrupt confirmation, session close) ride a higher
priority class than data events, so a subscriber drains control traffic
ahead of any backlog of audio or text. Telemetry rides below data and is
dropped rather than ever blocking a publisher.
"""

from __future__ import annotations

import asyncio
import heapq
import logging
import time
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Awaitable, Callable

from .audio import AudioFrame
from .errors import DuplicateSubscriber, SessionClosed, UnknownSession

logger = logging.getLogger(__name__)

DEFAULT_QUEUE_LIMIT = 1024


class Priority(IntEnum):
    CONTROL = 0
    DATA = 1
    TELEMETRY = 2


class EventKind(Enum):
    SESSION_OPEN = "session_open"
    SESSION_CLOSE = "session_close"
    AUDIO_IN = "audio_in"
    VAD_START = "vad_start"
    VAD_END = "vad_end"
    ASR_PARTIAL = "asr_partial"
    ASR_FINAL = "asr_final"
    LLM_TOKEN = "llm_token"
    LLM_SENTENCE = "llm_sentence"
    LLM_DONE = "llm_done"
    TOOL_CALL_START = "tool_call_start"
    TOOL_CALL_END = "tool_call_end"
    PHATIC_UTTERANCE = "phatic_utterance"
    TTS_CHUNK = "tts_chunk"
    TTS_DONE = "tts_done"
    INTERRUPT_CANDIDATE = "interrupt_candidate"
    INTERRUPT_CONFIRMED = "interrupt_confirmed"
    FALSE_INTERRUPT = "false_interrupt"
    RESUME = "resume"
    PAUSE_PLAYBACK = "pause_playback"
    FLUSH = "flush"
    STOP = "stop"
    TIMBRE_SWITCH = "timbre_switch"
    EMOTION_SWITCH = "emotion_switch"
    THINKING_START = "thinking_start"
    THINKING_END = "thinking_end"
    CAPTION_UPDATED = "caption_updated"
    SPEAKER_IDENTIFIED = "speaker_identified"
    METRIC = "metric"


CONTROL_KINDS = frozenset(
    {
        EventKind.FLUSH,
        EventKind.STOP,
        EventKind.PAUSE_PLAYBACK,
        EventKind.RESUME,
        EventKind.INTERRUPT_CONFIRMED,
        EventKind.SESSION_CLOSE,
    }
)


def priority_for(kind: EventKind) -> Priority:
    """Every kind maps to exactly one priority class."""
    if kind in CONTROL_KINDS:
        return Priority.CONTROL
    if kind is EventKind.METRIC:
        return Priority.TELEMETRY
    return Priority.DATA


# --- payload variants ---------------------------------------------------


@dataclass(frozen=True)
class AudioInPayload:
    frame: AudioFrame


@dataclass(frozen=True)
class VadPayload:
    utterance_ms: float = 0.0
    source: str = "vad"


@dataclass(frozen=True)
class AsrPartialPayload:
    turn_hint: int
    finalized: str
    volatile: str


@dataclass(frozen=True)
class AsrFinalPayload:
    text: str
    utterance_ms: float
    degraded: bool = False


@dataclass(frozen=True)
class TokenPayload:
    turn_id: int
    text: str


@dataclass(frozen=True)
class SentencePayload:
    turn_id: int
    index: int
    text: str


@dataclass(frozen=True)
class LlmDonePayload:
    turn_id: int
    sentence_count: int


@dataclass(frozen=True)
class ToolPayload:
    turn_id: int
    tool_name: str
    detail: str = ""


@dataclass(frozen=True)
class TtsChunkPayload:
    turn_id: int
    clause_index: int
    chunk_index: int
    pcm: bytes


@dataclass(frozen=True)
class TtsDonePayload:
    turn_id: int
    clause_count: int
    total_ms: float


@dataclass(frozen=True)
class InterruptCandidatePayload:
    source: str = "vad"


@dataclass(frozen=True)
class ControlPayload:
    """Flush/Stop/PausePlayback/Resume/InterruptConfirmed target a turn."""

    turn_id: int = 0
    reason: str = ""


@dataclass(frozen=True)
class ConfigSwitchPayload:
    turn_id: int
    value: str
    mechanism: str = ""


@dataclass(frozen=True)
class ThinkingPayload:
    turn_id: int
    summary: str = ""


@dataclass(frozen=True)
class CaptionPayload:
    text: str
    rewritten: bool


@dataclass(frozen=True)
class SpeakerPayload:
    speaker_id: str
    similarity: float
    newly_registered: bool


@dataclass(frozen=True)
class MetricPayload:
    name: str
    value: float
    turn_id: int = 0
    detail: str = ""


@dataclass(frozen=True)
class SessionPayload:
    reason: str = ""


PAYLOAD_TYPES: dict[EventKind, type] = {
    EventKind.SESSION_OPEN: SessionPayload,
    EventKind.SESSION_CLOSE: SessionPayload,
    EventKind.AUDIO_IN: AudioInPayload,
    EventKind.VAD_START: VadPayload,
    EventKind.VAD_END: VadPayload,
    EventKind.ASR_PARTIAL: AsrPartialPayload,
    EventKind.ASR_FINAL: AsrFinalPayload,
    EventKind.LLM_TOKEN: TokenPayload,
    EventKind.LLM_SENTENCE: SentencePayload,
    EventKind.LLM_DONE: LlmDonePayload,
    EventKind.TOOL_CALL_START: ToolPayload,
    EventKind.TOOL_CALL_END: ToolPayload,
    EventKind.PHATIC_UTTERANCE: SentencePayload,
    EventKind.TTS_CHUNK: TtsChunkPayload,
    EventKind.TTS_DONE: TtsDonePayload,
    EventKind.INTERRUPT_CANDIDATE: InterruptCandidatePayload,
    EventKind.INTERRUPT_CONFIRMED: ControlPayload,
    EventKind.FALSE_INTERRUPT: ControlPayload,
    EventKind.RESUME: ControlPayload,
    EventKind.PAUSE_PLAYBACK: ControlPayload,
    EventKind.FLUSH: ControlPayload,
    EventKind.STOP: ControlPayload,
    EventKind.TIMBRE_SWITCH: ConfigSwitchPayload,
    EventKind.EMOTION_SWITCH: ConfigSwitchPayload,
    EventKind.THINKING_START: ThinkingPayload,
    EventKind.THINKING_END: ThinkingPayload,
    EventKind.CAPTION_UPDATED: CaptionPayload,
    EventKind.SPEAKER_IDENTIFIED: SpeakerPayload,
    EventKind.METRIC: MetricPayload,
}


@dataclass
class Event:
    """The universal message unit flowing on the bus.

    ``event_id`` is assigned by the bus at publish time and is strictly
    increasing per session; ``priority`` derives from ``kind``.
    """

    session_id: str
    kind: EventKind
    payload: Any
    event_id: int = 0
    created_at: int = 0  # monotonic nanoseconds
    priority: Priority = field(init=False)

    def __post_init__(self) -> None:
        self.priority = priority_for(self.kind)
        expected = PAYLOAD_TYPES[self.kind]
        if not isinstance(self.payload, expected):
            raise TypeError(
                f"{self.kind.value} payload must be {expected.__name__}, "
                f"got {type(self.payload).__name__}"
            )


Handler = Callable[[Event], Awaitable[None]]


class Subscription:
    """One subscriber's view of a session's event stream.

    Pending events order by (priority, event_id); dequeue always returns
    the minimum. DATA publishes exert backpressure when the queue is at
    its limit, CONTROL is always accepted, TELEMETRY is dropped on
    overflow so it can never stall the pipeline.
    """

    def __init__(
        self,
        session_id: str,
        subscriber_id: str,
        kinds: frozenset[EventKind],
        queue_limit: int = DEFAULT_QUEUE_LIMIT,
    ) -> None:
        self.session_id = session_id
        self.subscriber_id = subscriber_id
        self.kinds = kinds
        self.queue_limit = queue_limit
        self.delivered = 0
        self.dropped_telemetry = 0
        self._heap: list[tuple[int, int, Event]] = []
        self._cond = asyncio.Condition()
        self._closed = False

    def matches(self, kind: EventKind) -> bool:
        return kind in self.kinds

    async def _offer(self, event: Event) -> bool:
        async with self._cond:
            if event.priority is Priority.DATA:
                while len(self._heap) >= self.queue_limit and not self._closed:
                    await self._cond.wait()
            elif event.priority is Priority.TELEMETRY:
                if len(self._heap) >= self.queue_limit:
                    self.dropped_telemetry += 1
                    return False
            if self._closed:
                return False
            heapq.heappush(self._heap, (event.priority, event.event_id, event))
            self._cond.notify_all()
            return True

    async def next(self) -> Event:
        """Dequeue the pending event with minimal (priority, event_id).

        Blocks until an event is available; drains any backlog after the
        session closes, then raises SessionClosed.
        """
        async with self._cond:
            while True:
                if self._heap:
                    _, _, event = heapq.heappop(self._heap)
                    self.delivered += 1
                    self._cond.notify_all()
                    return event
                if self._closed:
                    raise SessionClosed(self.session_id)
                await self._cond.wait()

    def pending(self) -> int:
        return len(self._heap)

    async def _close(self) -> None:
        async with self._cond:
            self._closed = True
            self._cond.notify_all()


class _SessionScope:
    def __init__(self, session_id: str) -> None:
        self.session_id = session_id
        self.subscriptions: dict[str, Subscription] = {}
        self.last_event_id = 0
        self.open = True


class EventBus:
    """In-process publish-subscribe fabric, session-scoped.

    Safe for use from any task on one event loop. Handler-backed
    subscriptions run serially per subscription and concurrently across
    subscriptions and sessions.
    """

    def __init__(self, queue_limit: int = DEFAULT_QUEUE_LIMIT) -> None:
        self.queue_limit = queue_limit
        self._scopes: dict[str, _SessionScope] = {}
        self._handler_tasks: dict[tuple[str, str], asyncio.Task] = {}

    # -- session scope lifecycle --

    def create_session(self, session_id: str) -> None:
        if session_id in self._scopes:
            raise UnknownSession(f"session scope already exists: {session_id}")
        self._scopes[session_id] = _SessionScope(session_id)

    def session_open(self, session_id: str) -> bool:
        scope = self._scopes.get(session_id)
        return scope is not None and scope.open

    # -- core operations --

    async def publish(self, event: Event) -> int:
        """Enqueue the event for every matching subscription of its session.

        Returns the number of subscriptions matched. Never waits for any
        handler to run.
        """
        scope = self._scopes.get(event.session_id)
        if scope is None:
            if event.kind is EventKind.SESSION_OPEN:
                self.create_session(event.session_id)
                scope = self._scopes[event.session_id]
            else:
                raise UnknownSession(event.session_id)
        if not scope.open:
            raise UnknownSession(f"session closed: {event.session_id}")

        if event.event_id:
            if event.event_id <= scope.last_event_id:
                raise ValueError(
                    f"event_id {event.event_id} not increasing for {event.session_id}"
                )
            scope.last_event_id = event.event_id
        else:
            scope.last_event_id += 1
            event.event_id = scope.last_event_id
        if not event.created_at:
            event.created_at = time.monotonic_ns()

        matched = 0
        for sub in list(scope.subscriptions.values()):
            if sub.matches(event.kind):
                matched += 1
                await sub._offer(event)

        if event.kind is EventKind.SESSION_CLOSE:
            scope.open = False
            for sub in list(scope.subscriptions.values()):
                await sub._close()
        return matched

    async def emit(self, session_id: str, kind: EventKind, payload: Any) -> int:
        return await self.publish(Event(session_id=session_id, kind=kind, payload=payload))

    def subscribe(
        self,
        session_id: str,
        subscriber_id: str,
        kinds: set[EventKind] | frozenset[EventKind],
        handler: Handler | None = None,
        queue_limit: int | None = None,
    ) -> Subscription:
        """Register a subscriber for a set of kinds within one session.

        With a handler, the bus runs a dedicated consumer task invoking it
        serially per event; without one, callers pull via next_for().
        """
        scope = self._scopes.get(session_id)
        if scope is None or not scope.open:
            raise UnknownSession(session_id)
        if subscriber_id in scope.subscriptions:
            raise DuplicateSubscriber(f"{subscriber_id} in {session_id}")
        sub = Subscription(
            session_id,
            subscriber_id,
            frozenset(kinds),
            queue_limit or self.queue_limit,
        )
        scope.subscriptions[subscriber_id] = sub
        if handler is not None:
            task = asyncio.create_task(
                self._consume(sub, handler),
                name=f"sub-{session_id}-{subscriber_id}",
            )
            self._handler_tasks[(session_id, subscriber_id)] = task
        return sub

    async def next_for(self, subscription: Subscription) -> Event:
        return await subscription.next()

    def unsubscribe(self, subscription: Subscription) -> None:
        scope = self._scopes.get(subscription.session_id)
        if scope:
            scope.subscriptions.pop(subscription.subscriber_id, None)
        task = self._handler_tasks.pop(
            (subscription.session_id, subscription.subscriber_id), None
        )
        if task and not task.done():
            task.cancel()

    async def close_scope(self, session_id: str) -> None:
        """Tear down a scope without a SessionClose event (abnormal paths)."""
        scope = self._scopes.get(session_id)
        if scope is None:
            return
        scope.open = False
        for sub in list(scope.subscriptions.values()):
            await sub._close()

    async def _consume(self, sub: Subscription, handler: Handler) -> None:
        try:
            while True:
                event = await sub.next()
                try:
                    await handler(event)
                except asyncio.CancelledError:
                    raise
                except Exception:
                    logger.exception(
                        "handler %s/%s failed on %s",
                        sub.session_id,
                        sub.subscriber_id,
                        event.kind.value,
                    )
        except (SessionClosed, asyncio.CancelledError):
            pass
