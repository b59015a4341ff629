"""Input and output gateways: the boundary between wire frames and events.

The input gateway decodes client frames and publishes typed events; the
output gateway subscribes to client-visible kinds and serializes frames
per connection. Control events ride ahead of queued data, which is what
guarantees that a confirmed interruption's flush outruns any stale
synthesized audio still waiting in the output queue.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from .errors import (
    MalformedFrame,
    NotClientVisible,
    SequenceRegression,
    UnknownSession,
)
from .events import (
    AsrFinalPayload,
    AudioInPayload,
    Event,
    EventKind,
    InterruptCandidatePayload,
    MetricPayload,
    VadPayload,
)
from .protocol import (
    CLIENT_VISIBLE,
    ClientFrameDecoder,
    ClientMessage,
    encode_error,
    encode_server_event,
)
from .telemetry import compute_e2e, decompose

if TYPE_CHECKING:
    from .session import Session, SessionManager

logger = logging.getLogger(__name__)


class InputGateway:
    """Decodes one connection's frames into session events."""

    def __init__(self, session: "Session", manager: "SessionManager") -> None:
        self.session = session
        self.manager = manager
        self.decoder = ClientFrameDecoder()

    async def run(self) -> None:
        """Read frames until disconnect or bye; disconnect closes the session."""
        conn = self.session.connection
        while True:
            frame = await conn.recv()
            if frame is None:
                break
            try:
                msg = self.decoder.decode(frame)
            except (MalformedFrame, SequenceRegression) as exc:
                await self._send_error("bad_frame", str(exc))
                continue
            try:
                await self.ingest(msg)
            except UnknownSession:
                await self._send_error("unknown_session", "session is closed")
            if msg.msg_type == "bye":
                # Keep reading so late frames get unknown_session errors
                # until the client actually drops the pipe.
                continue
        if not self.session.closed:
            await self.manager.close_session(self.session)

    async def _send_error(self, code: str, detail: str) -> None:
        try:
            await self.session.connection.send(encode_error(code, detail))
        except ConnectionError:
            pass

    async def ingest(self, msg: ClientMessage) -> list["Event"]:
        """Map one client message onto bus events; returns what was published."""
        session = self.session
        if session.closed or not session.bus.session_open(session.session_id):
            raise UnknownSession(session.session_id)
        sid = session.session_id
        bus = session.bus
        published: list[Event] = []

        async def emit(kind: EventKind, payload) -> None:
            event = Event(session_id=sid, kind=kind, payload=payload)
            await bus.publish(event)
            published.append(event)

        if msg.msg_type == "audio":
            await emit(EventKind.AUDIO_IN, AudioInPayload(frame=msg.payload))
        elif msg.msg_type == "vad_start":
            await emit(EventKind.VAD_START, VadPayload(source="vad"))
            if session.pipeline.playback_active:
                await emit(
                    EventKind.INTERRUPT_CANDIDATE, InterruptCandidatePayload(source="vad")
                )
        elif msg.msg_type == "vad_end":
            session.tracebook.begin_pending()
            session.tracebook.mark("vad_end_at")
            await emit(EventKind.VAD_END, VadPayload(source="vad"))
        elif msg.msg_type == "barge_in":
            await emit(
                EventKind.INTERRUPT_CANDIDATE, InterruptCandidatePayload(source="button")
            )
        elif msg.msg_type == "text_input":
            text = str(msg.payload.get("text", ""))
            await emit(
                EventKind.ASR_FINAL,
                AsrFinalPayload(text=text, utterance_ms=0.0, degraded=False),
            )
        elif msg.msg_type == "config":
            await self._apply_config(msg.payload)
        elif msg.msg_type == "bye":
            await self.manager.close_session(session)
        elif msg.msg_type == "hello":
            await self._send_error("protocol", "hello after handshake")
        return published

    async def _apply_config(self, payload: dict) -> None:
        agent = self.session.agent_manager
        turn = self.session.pipeline.turn_state.current_turn_id
        if "timbre" in payload:
            await agent.handle_timbre_switch(str(payload["timbre"]), turn)
        if "emotion" in payload:
            await agent.handle_emotion_switch(str(payload["emotion"]), turn)


class OutputGateway:
    """Serializes client-visible events onto the connection.

    Subscribes to the control kinds as well: a flush/stop/confirmation
    for a turn arrives ahead of that turn's queued audio and marks it
    dead, so stale chunks are dropped instead of written.
    """

    KINDS = frozenset(CLIENT_VISIBLE) | {
        EventKind.FLUSH,
        EventKind.STOP,
        EventKind.INTERRUPT_CONFIRMED,
        EventKind.SESSION_CLOSE,
    }

    def __init__(self, session: "Session") -> None:
        self.session = session
        self.frame_log: list[str | bytes] = []
        self.dropped_chunks = 0
        self._dead_turns: set[int] = set()
        self._chunk_seen_turns: set[int] = set()
        self._stopped = False

    async def handle(self, event: "Event") -> None:
        kind = event.kind
        if kind in (EventKind.FLUSH, EventKind.STOP, EventKind.INTERRUPT_CONFIRMED):
            self._dead_turns.add(event.payload.turn_id)
            return
        if kind is EventKind.SESSION_CLOSE:
            self._stopped = True
            return
        if self._stopped:
            return
        if kind is EventKind.TTS_CHUNK and event.payload.turn_id in self._dead_turns:
            self.dropped_chunks += 1
            return
        if kind is EventKind.TTS_DONE and event.payload.turn_id in self._dead_turns:
            return

        if kind is EventKind.TTS_CHUNK:
            turn_id = event.payload.turn_id
            if turn_id not in self._chunk_seen_turns:
                self._chunk_seen_turns.add(turn_id)
                self.session.tracebook.mark("tts_first_chunk_at", turn_id)

        try:
            frame = encode_server_event(event)
        except NotClientVisible:  # pragma: no cover - subscription is scoped
            return
        try:
            await self.session.connection.send(frame)
        except ConnectionError:
            return
        self.frame_log.append(frame)

        if kind is EventKind.TTS_DONE:
            await self._finish_turn(event.payload.turn_id)

    async def _finish_turn(self, turn_id: int) -> None:
        """Stamp turn completion and publish the per-turn latency metrics."""
        book = self.session.tracebook
        try:
            book.mark("turn_done_at", turn_id)
        except Exception:
            return
        if not self.session.config.telemetry_enabled:
            return
        trace = book.trace_for(turn_id)
        if trace is None:
            return
        try:
            e2e = compute_e2e(trace)
            asr_ms, llm_ms, tts_ms = decompose(trace)
        except Exception:
            return
        bus = self.session.bus
        sid = self.session.session_id
        for name, value in (
            ("e2e_ms", e2e),
            ("asr_span_ms", asr_ms),
            ("llm_span_ms", llm_ms),
            ("tts_span_ms", tts_ms),
        ):
            try:
                await bus.emit(
                    sid, EventKind.METRIC, MetricPayload(name=name, value=value, turn_id=turn_id)
                )
            except UnknownSession:
                return
