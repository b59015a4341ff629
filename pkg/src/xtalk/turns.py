"""Turn taking: the barge-in state machine and false-interruption rules.

Speech onset during agent playback pauses the client immediately and
opens a verification window. When the interrupting utterance finishes,
rule-based validation either confirms the interrupt (old turn flushed,
stopped, and cancelled; the transcript becomes the new user input) or
rejects it (client resumes, suspended output continues seamlessly).
"""

from __future__ import annotations

import asyncio
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable

from .events import (
    AsrFinalPayload,
    ControlPayload,
    EventKind,
)
from .textutil import is_cjk, strip_punct_space

if TYPE_CHECKING:
    from .session import Session

logger = logging.getLogger(__name__)

DEFAULT_FILLER_WORDS = ("嗯", "啊", "呃", "uh", "um", "hmm", "呵呵")


class Phase(Enum):
    IDLE = "idle"
    USER_SPEAKING = "user_speaking"
    PROCESSING = "processing"
    AGENT_SPEAKING = "agent_speaking"
    VERIFYING_INTERRUPT = "verifying_interrupt"


@dataclass
class InterruptCandidate:
    started_at: int = field(default_factory=time.monotonic_ns)
    audio_ms: float = 0.0
    transcript: str | None = None
    suspended_turn_id: int = 0
    playback_finished: bool = False


@dataclass
class TurnState:
    phase: Phase = Phase.IDLE
    current_turn_id: int = 0
    interrupt_open: InterruptCandidate | None = None


@dataclass(frozen=True)
class FalseInterruptRules:
    min_audio_ms: float = 500.0
    filler_words: tuple[str, ...] = DEFAULT_FILLER_WORDS
    single_char_reject: bool = True
    verify_deadline_ms: float = 10_000.0

    def __post_init__(self) -> None:
        if self.min_audio_ms <= 0:
            raise ValueError("min_audio_ms must be positive")


@dataclass(frozen=True)
class ValidationResult:
    confirmed: bool
    reason: str | None = None  # too_short | empty_asr | single_char | filler_only

    @classmethod
    def false(cls, reason: str) -> "ValidationResult":
        return cls(confirmed=False, reason=reason)

    @classmethod
    def ok(cls) -> "ValidationResult":
        return cls(confirmed=True)


def _filler_segmentable(token: str, fillers: tuple[str, ...]) -> bool:
    if token == "":
        return True
    for f in sorted(fillers, key=len, reverse=True):
        if f and token.startswith(f) and _filler_segmentable(token[len(f) :], fillers):
            return True
    return False


def validate_interrupt(
    candidate: InterruptCandidate, rules: FalseInterruptRules
) -> ValidationResult:
    """Pure rule evaluation, in order: duration, empty, single-char, filler.

    The single-character rule targets stray letters and digits; a lone
    CJK ideograph is a word and falls through to the filler list.
    """
    if candidate.audio_ms < rules.min_audio_ms:
        return ValidationResult.false("too_short")

    transcript = candidate.transcript or ""
    core = strip_punct_space(transcript)
    if not core:
        return ValidationResult.false("empty_asr")

    if (
        rules.single_char_reject
        and len(core) == 1
        and core.isalnum()
        and not is_cjk(core)
    ):
        return ValidationResult.false("single_char")

    fillers = tuple(f.lower() for f in rules.filler_words if f)
    tokens = [strip_punct_space(t).lower() for t in transcript.split()] or [core.lower()]
    tokens = [t for t in tokens if t]
    if tokens and all(_filler_segmentable(t, fillers) for t in tokens):
        return ValidationResult.false("filler_only")

    return ValidationResult.ok()


class TurnManager:
    """Owns TurnState; all transitions are serialized through the bus."""

    KINDS = frozenset(
        {
            EventKind.VAD_START,
            EventKind.VAD_END,
            EventKind.ASR_FINAL,
            EventKind.INTERRUPT_CANDIDATE,
            EventKind.TTS_CHUNK,
            EventKind.TTS_DONE,
        }
    )

    def __init__(self, session: "Session") -> None:
        self.session = session
        self.rules = session.config.rules
        # Optional deeper verification ("is this really addressed to us?")
        # consulted only for candidates that pass every rule; returning a
        # false ValidationResult rejects the interrupt.
        self.semantic_validator: Callable[[InterruptCandidate], ValidationResult] | None = None
        self._deadline_task: asyncio.Task | None = None

    @property
    def state(self) -> TurnState:
        return self.session.pipeline.turn_state

    async def handle(self, event) -> None:
        kind = event.kind
        if kind is EventKind.VAD_START:
            await self._on_vad_start()
        elif kind is EventKind.VAD_END:
            self._on_vad_end()
        elif kind is EventKind.INTERRUPT_CANDIDATE:
            await self.on_interrupt_candidate()
        elif kind is EventKind.ASR_FINAL:
            await self._on_asr_final(event.payload)
        elif kind is EventKind.TTS_CHUNK:
            if (
                self.state.phase is Phase.PROCESSING
                and event.payload.turn_id == self.state.current_turn_id
            ):
                self.state.phase = Phase.AGENT_SPEAKING
        elif kind is EventKind.TTS_DONE:
            self._on_tts_done(event.payload.turn_id)

    async def _on_vad_start(self) -> None:
        if self.state.phase is Phase.IDLE:
            self.state.phase = Phase.USER_SPEAKING
        # In AGENT_SPEAKING the candidate event drives the transition; in
        # PROCESSING/VERIFYING the phase machine stays put.

    def _on_vad_end(self) -> None:
        if self.state.phase is Phase.USER_SPEAKING:
            self.state.phase = Phase.PROCESSING

    async def on_interrupt_candidate(self) -> None:
        """Agent playback preemption: pause the client, start verifying."""
        state = self.state
        if state.phase is not Phase.AGENT_SPEAKING or state.interrupt_open is not None:
            return
        state.interrupt_open = InterruptCandidate(
            suspended_turn_id=state.current_turn_id
        )
        state.phase = Phase.VERIFYING_INTERRUPT
        await self.session.bus.emit(
            self.session.session_id,
            EventKind.PAUSE_PLAYBACK,
            ControlPayload(turn_id=state.current_turn_id, reason="interrupt_candidate"),
        )
        self._deadline_task = asyncio.create_task(self._verify_deadline())

    async def _verify_deadline(self) -> None:
        """A candidate with no utterance end within the deadline is real
        speech at length: confirm without waiting."""
        try:
            await asyncio.sleep(self.rules.verify_deadline_ms / 1000.0)
        except asyncio.CancelledError:
            return
        state = self.state
        if state.phase is not Phase.VERIFYING_INTERRUPT or state.interrupt_open is None:
            return
        old_turn = state.interrupt_open.suspended_turn_id
        state.interrupt_open = None
        await self._cancel_old_turn(old_turn)
        state.phase = Phase.USER_SPEAKING

    async def _on_asr_final(self, payload: AsrFinalPayload) -> None:
        state = self.state
        if state.phase is Phase.VERIFYING_INTERRUPT and state.interrupt_open:
            candidate = state.interrupt_open
            candidate.audio_ms = payload.utterance_ms
            candidate.transcript = payload.text
            if self._deadline_task:
                self._deadline_task.cancel()
                self._deadline_task = None
            result = validate_interrupt(candidate, self.rules)
            if result.confirmed and self.semantic_validator is not None:
                result = self.semantic_validator(candidate)
            await self.on_validation_result(result)
            return
        if state.phase in (Phase.PROCESSING, Phase.IDLE):
            if not payload.text.strip():
                state.phase = Phase.IDLE
                return
            await self._start_turn(payload.text)

    async def on_validation_result(self, result: ValidationResult) -> None:
        state = self.state
        candidate = state.interrupt_open
        if candidate is None:
            return
        state.interrupt_open = None
        session = self.session
        if not result.confirmed:
            await session.bus.emit(
                session.session_id,
                EventKind.FALSE_INTERRUPT,
                ControlPayload(
                    turn_id=candidate.suspended_turn_id, reason=result.reason or ""
                ),
            )
            await session.bus.emit(
                session.session_id,
                EventKind.RESUME,
                ControlPayload(turn_id=candidate.suspended_turn_id),
            )
            state.phase = (
                Phase.IDLE if candidate.playback_finished else Phase.AGENT_SPEAKING
            )
            return
        old_turn = candidate.suspended_turn_id
        await self._cancel_old_turn(old_turn)
        await self._start_turn(candidate.transcript or "")

    async def _cancel_old_turn(self, turn_id: int) -> None:
        session = self.session
        await session.bus.emit(
            session.session_id,
            EventKind.INTERRUPT_CONFIRMED,
            ControlPayload(turn_id=turn_id),
        )
        await session.bus.emit(
            session.session_id, EventKind.FLUSH, ControlPayload(turn_id=turn_id)
        )
        await session.bus.emit(
            session.session_id, EventKind.STOP, ControlPayload(turn_id=turn_id)
        )
        session.agent_manager.cancel_turn(turn_id)
        session.tts_manager.cancel_turn(turn_id)
        session.pipeline.playback_active = False

    async def _start_turn(self, text: str) -> None:
        state = self.state
        state.current_turn_id += 1
        state.phase = Phase.PROCESSING
        self.session.tracebook.bind_pending(state.current_turn_id)
        self.session.agent_manager.begin_turn(text, state.current_turn_id)

    def _on_tts_done(self, turn_id: int) -> None:
        state = self.state
        if turn_id != state.current_turn_id:
            return
        if state.phase is Phase.AGENT_SPEAKING or state.phase is Phase.PROCESSING:
            state.phase = Phase.IDLE
        elif state.phase is Phase.VERIFYING_INTERRUPT and state.interrupt_open:
            state.interrupt_open.playback_finished = True

    async def aclose(self) -> None:
        if self._deadline_task and not self._deadline_task.done():
            self._deadline_task.cancel()
