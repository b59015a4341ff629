"""Per-connection service instantiation and state isolation.

Model backends are process-wide singletons shared read-only across
sessions; every mutable buffer, queue, and state machine lives in a
PipelineState owned by exactly one session. A SessionLimiter caps
concurrent sessions.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .agent import AgentManager
from .asr import AsrManager, TranscriptState
from .backends import (
    CaptionRewriter,
    MockAsrBackend,
    MockCaptioner,
    MockLlmBackend,
    MockSpeakerEmbedder,
    MockStreamingAsrBackend,
    MockThinker,
    MockTtsBackend,
    ScenarioCorpus,
    ToolRegistry,
)
from .config import AppConfig
from .errors import InvalidConfig, OverCapacity
from .events import EventBus, EventKind, MetricPayload, SessionPayload
from .gateway import InputGateway, OutputGateway
from .side_channels import RollingAudioBuffer, SideChannelManager
from .telemetry import TraceBook
from .transport import Connection
from .tts import TtsManager
from .turns import TurnManager, TurnState

logger = logging.getLogger(__name__)

_session_counter = itertools.count(1)


@dataclass
class TtsConfigState:
    timbre: str
    emotion: str


class PipelineState:
    """The complete per-session mutable state bundle.

    Instances are counted so tests can prove sessions release what they
    allocate.
    """

    live_count = 0

    def __init__(self, config: AppConfig) -> None:
        self.transcript_state = TranscriptState(window=config.asr.window_w)
        self.turn_state = TurnState()
        self.rolling_buffer = RollingAudioBuffer()
        self.tts_config = TtsConfigState(
            timbre=config.tts.default_timbre, emotion=config.tts.default_emotion
        )
        self.history: list[tuple[str, str]] = []
        self.caption: str | None = None
        self.speaker_id: str | None = None
        self.thought: str | None = None
        self.playback_active = False
        self._released = False
        PipelineState.live_count += 1

    def release(self) -> None:
        if not self._released:
            self._released = True
            PipelineState.live_count -= 1


def fork_pipeline_state(config: AppConfig) -> PipelineState:
    """Build a fresh, fully disjoint state bundle for one session."""
    if config.asr.window_w < 2:
        raise InvalidConfig("asr.window_w must be >= 2")
    if config.tts.concurrency < 1:
        raise InvalidConfig("tts.concurrency must be >= 1")
    return PipelineState(config)


class SessionLimiter:
    """Admission control: at most max_sessions concurrent sessions.

    Acquire/release never await between check and update, so the count is
    atomic on one event loop. The high-water mark is kept for tests.
    """

    def __init__(self, max_sessions: int) -> None:
        if max_sessions < 1:
            raise ValueError("max_sessions must be positive")
        self.max_sessions = max_sessions
        self.active = 0
        self.high_water = 0

    def try_acquire(self) -> bool:
        if self.active >= self.max_sessions:
            return False
        self.active += 1
        self.high_water = max(self.high_water, self.active)
        return True

    def release(self) -> None:
        if self.active > 0:
            self.active -= 1


class SharedBackends:
    """Process-wide model handles, safe for concurrent sessions."""

    def __init__(self, config: AppConfig, corpus: ScenarioCorpus | None = None) -> None:
        self.corpus = corpus or ScenarioCorpus.load(config.scenario_dir)
        self.asr_offline = MockAsrBackend(
            self.corpus,
            config.asr.latency if config.asr.mode == "pseudo_streaming" else config.asr.offline_latency,
        )
        self.asr_streaming = MockStreamingAsrBackend(
            self.corpus, config.asr.streaming_latency
        )
        self.llm = MockLlmBackend(self.corpus, config.llm.latency)
        self.thinker = MockThinker(self.corpus, config.llm.thinking_latency)
        self.tts_backends = {
            "reference_tts": MockTtsBackend(
                config.tts.latency,
                config.tts.chars_per_second,
                native_emotion_control=False,
                name="reference_tts",
            ),
            "vector_tts": MockTtsBackend(
                config.tts.latency,
                config.tts.chars_per_second,
                native_emotion_control=True,
                name="vector_tts",
            ),
        }
        self._speech_route = config.tts.routes.get("speech", "reference_tts")
        self.captioner = MockCaptioner(self.corpus, config.side_channels.captioner_latency)
        self.rewriter = CaptionRewriter(self.corpus, config.side_channels.rewriter_latency)
        self.embedder = MockSpeakerEmbedder(
            self.corpus, config.side_channels.embedder_latency
        )
        self.tools = ToolRegistry(self.corpus.tools)

    def tts_for(self, timbre: str) -> MockTtsBackend:
        # Profiles tagged *_native route to the vector-controlled backend.
        if timbre.endswith("_native"):
            return self.tts_backends["vector_tts"]
        return self.tts_backends[self._speech_route or "reference_tts"]


class Session:
    """One connection's service instance: managers, gateways, state."""

    def __init__(
        self,
        session_id: str,
        connection: Connection,
        bus: EventBus,
        config: AppConfig,
        backends: SharedBackends,
    ) -> None:
        self.session_id = session_id
        self.connection = connection
        self.bus = bus
        self.config = config
        self.backends = backends
        self.pipeline = fork_pipeline_state(config)
        self.tracebook = TraceBook(
            metric_hook=self._metric_hook if config.telemetry_enabled else None
        )
        self.closed = False

        self.asr_manager: AsrManager | None = None
        self.turn_manager: TurnManager | None = None
        self.agent_manager: AgentManager | None = None
        self.tts_manager: TtsManager | None = None
        self.side_manager: SideChannelManager | None = None
        self.input_gateway: InputGateway | None = None
        self.output_gateway: OutputGateway | None = None
        self._input_task: asyncio.Task | None = None

    def _metric_hook(self, name: str, value: float, turn_id: int) -> None:
        if self.closed or not self.bus.session_open(self.session_id):
            return

        async def _publish() -> None:
            try:
                await self.bus.emit(
                    self.session_id,
                    EventKind.METRIC,
                    MetricPayload(name=name, value=value, turn_id=turn_id),
                )
            except Exception:
                pass

        asyncio.get_running_loop().create_task(_publish())

    def start_input(self) -> None:
        self._input_task = asyncio.create_task(
            self.input_gateway.run(), name=f"input-{self.session_id}"
        )

    @property
    def frame_log(self) -> list:
        return self.output_gateway.frame_log if self.output_gateway else []


class SessionManager:
    """Opens and closes sessions; owns the limiter."""

    def __init__(
        self,
        bus: EventBus,
        config: AppConfig,
        backends: SharedBackends,
        limiter: SessionLimiter | None = None,
    ) -> None:
        self.bus = bus
        self.config = config
        self.backends = backends
        self.limiter = limiter or SessionLimiter(config.limiter.max_sessions)
        self.sessions: dict[str, Session] = {}

    async def open_session(self, connection: Connection) -> Session:
        """Admit, build isolated state, wire and subscribe all managers.

        Raises OverCapacity at the limit; the caller reports the error to
        the client and closes the connection.
        """
        if not self.limiter.try_acquire():
            raise OverCapacity(f"{self.limiter.active} active sessions")
        session_id = f"s{next(_session_counter):04d}"
        try:
            self.bus.create_session(session_id)
            session = Session(session_id, connection, self.bus, self.config, self.backends)
            session.asr_manager = AsrManager(session)
            session.turn_manager = TurnManager(session)
            session.agent_manager = AgentManager(session)
            session.tts_manager = TtsManager(session)
            session.side_manager = SideChannelManager(session)
            session.input_gateway = InputGateway(session, self)
            session.output_gateway = OutputGateway(session)

            bus = self.bus
            bus.subscribe(session_id, "asr_manager", AsrManager.KINDS, session.asr_manager.handle)
            bus.subscribe(session_id, "turn_manager", TurnManager.KINDS, session.turn_manager.handle)
            bus.subscribe(session_id, "tts_manager", TtsManager.KINDS, session.tts_manager.handle)
            bus.subscribe(
                session_id, "side_channels", SideChannelManager.KINDS, session.side_manager.handle
            )
            bus.subscribe(
                session_id, "output_gateway", OutputGateway.KINDS, session.output_gateway.handle
            )
            await bus.emit(session_id, EventKind.SESSION_OPEN, SessionPayload())
        except Exception:
            self.limiter.release()
            raise
        self.sessions[session_id] = session
        logger.info("session %s open (%d active)", session_id, self.limiter.active)
        return session

    async def close_session(self, session: Session) -> None:
        """Stop, cancel in-flight work, release state. Idempotent."""
        if session.closed:
            return
        session.closed = True
        bus = self.bus
        sid = session.session_id
        try:
            from .events import ControlPayload

            await bus.emit(
                sid,
                EventKind.STOP,
                ControlPayload(turn_id=session.pipeline.turn_state.current_turn_id),
            )
        except Exception:
            pass
        for manager in (
            session.asr_manager,
            session.turn_manager,
            session.agent_manager,
            session.tts_manager,
            session.side_manager,
        ):
            if manager is not None:
                await manager.aclose()
        self._snapshot_speakers(session)
        try:
            await bus.emit(sid, EventKind.SESSION_CLOSE, SessionPayload(reason="close"))
        except Exception:
            await bus.close_scope(sid)
        input_task = session._input_task
        if (
            input_task is not None
            and not input_task.done()
            and input_task is not asyncio.current_task()
        ):
            input_task.cancel()
        session.pipeline.release()
        self.sessions.pop(sid, None)
        self.limiter.release()
        # The transport stays open: late client frames are answered with
        # unknown_session errors until the peer actually drops.
        logger.info("session %s closed (%d active)", sid, self.limiter.active)

    def _snapshot_speakers(self, session: Session) -> None:
        path = self.config.side_channels.speaker_snapshot_path
        if not path or session.side_manager is None:
            return
        try:
            Path(path).write_text(
                json.dumps(session.side_manager.registry.to_dict(), indent=2),
                encoding="utf-8",
            )
        except OSError:
            logger.warning("could not write speaker snapshot to %s", path)

    async def close_all(self) -> None:
        for session in list(self.sessions.values()):
            await self.close_session(session)
            await session.connection.close()
