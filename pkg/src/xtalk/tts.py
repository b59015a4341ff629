"""Speech synthesis stage: clause scheduling, ordered playback, cancellation.

Clauses of a turn synthesize concurrently (bounded by a per-session
limit); a reorder buffer releases audio strictly in clause order, chunked
for streaming. Control events gate everything: pause withholds emission,
resume drains, flush/stop kill the turn so no chunk can follow a
confirmed interruption.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .audio import pcm_duration_ms, split_pcm
from .events import (
    EventKind,
    SentencePayload,
    TtsChunkPayload,
    TtsDonePayload,
)

if TYPE_CHECKING:
    from .session import Session

logger = logging.getLogger(__name__)


@dataclass
class SynthesisJob:
    turn_id: int
    clause_index: int
    text: str
    timbre: str
    emotion: str
    status: str = "queued"  # queued | synthesizing | done | cancelled


@dataclass
class PlaybackQueue:
    """Reorder buffer for one turn: audio leaves only in clause order."""

    next_emit_index: int = 0
    completed: dict[int, bytes] = field(default_factory=dict)
    expected_clauses: int | None = None
    emitted_ms: float = 0.0
    scheduled: int = 0
    done_published: bool = False


class TtsManager:
    KINDS = frozenset(
        {
            EventKind.LLM_SENTENCE,
            EventKind.PHATIC_UTTERANCE,
            EventKind.LLM_DONE,
            EventKind.PAUSE_PLAYBACK,
            EventKind.RESUME,
            EventKind.FLUSH,
            EventKind.STOP,
        }
    )

    def __init__(self, session: "Session") -> None:
        self.session = session
        self.chunk_ms = session.config.chunk_ms
        self._turns: dict[int, PlaybackQueue] = {}
        self._dead_turns: set[int] = set()
        self._suspended_turn: int | None = None
        self._jobs: dict[tuple[int, int], SynthesisJob] = {}
        self._synth_tasks: dict[tuple[int, int], asyncio.Task] = {}
        self._sem = asyncio.Semaphore(session.config.tts.concurrency)
        self._emit_lock = asyncio.Lock()
        self.job_log: list[SynthesisJob] = []

    async def handle(self, event) -> None:
        kind = event.kind
        if kind in (EventKind.LLM_SENTENCE, EventKind.PHATIC_UTTERANCE):
            self.schedule(event.payload)
        elif kind is EventKind.LLM_DONE:
            await self._on_llm_done(event.payload.turn_id, event.payload.sentence_count)
        elif kind is EventKind.PAUSE_PLAYBACK:
            self._suspended_turn = event.payload.turn_id
        elif kind is EventKind.RESUME:
            turn = self._suspended_turn
            self._suspended_turn = None
            if turn is not None:
                await self._drain(turn)
        elif kind in (EventKind.FLUSH, EventKind.STOP):
            self.cancel_turn(event.payload.turn_id)

    # -- scheduling --

    def schedule(self, sentence: SentencePayload) -> SynthesisJob | None:
        """Create a synthesis job snapshotting the current voice config.

        Jobs for a cancelled turn are dropped, never submitted.
        """
        if sentence.turn_id in self._dead_turns:
            logger.debug(
                "dropping clause %d for dead turn %d",
                sentence.index,
                sentence.turn_id,
            )
            return None
        cfg = self.session.pipeline.tts_config
        job = SynthesisJob(
            turn_id=sentence.turn_id,
            clause_index=sentence.index,
            text=sentence.text,
            timbre=cfg.timbre,
            emotion=cfg.emotion,
        )
        self.job_log.append(job)
        queue = self._turns.setdefault(sentence.turn_id, PlaybackQueue())
        queue.scheduled += 1
        key = (job.turn_id, job.clause_index)
        self._jobs[key] = job
        task = asyncio.create_task(
            self._synthesize(job),
            name=f"tts-{self.session.session_id}-t{job.turn_id}c{job.clause_index}",
        )
        self._synth_tasks[key] = task
        task.add_done_callback(lambda t: self._synth_tasks.pop(key, None))
        return job

    async def _synthesize(self, job: SynthesisJob) -> None:
        async with self._sem:
            if job.turn_id in self._dead_turns:
                job.status = "cancelled"
                return
            job.status = "synthesizing"
            backend = self.session.backends.tts_for(job.timbre)
            result = await backend.synthesize(job.text, job.timbre, job.emotion)
            job.status = "done"
            await self.emit_ready(job, result.pcm)

    # -- emission --

    async def emit_ready(self, job: SynthesisJob, pcm: bytes) -> None:
        """Park completed audio in the reorder buffer and release every
        consecutive clause starting at next_emit_index."""
        if job.turn_id in self._dead_turns:
            return
        queue = self._turns.setdefault(job.turn_id, PlaybackQueue())
        queue.completed[job.clause_index] = pcm
        await self._drain(job.turn_id)

    async def _drain(self, turn_id: int) -> None:
        async with self._emit_lock:
            queue = self._turns.get(turn_id)
            if queue is None:
                return
            session = self.session
            while (
                turn_id not in self._dead_turns
                and self._suspended_turn != turn_id
                and queue.next_emit_index in queue.completed
            ):
                clause = queue.next_emit_index
                pcm = queue.completed.pop(clause)
                if not session.pipeline.playback_active:
                    session.pipeline.playback_active = True
                for i, piece in enumerate(split_pcm(pcm, self.chunk_ms)):
                    if turn_id in self._dead_turns:
                        return
                    await session.bus.emit(
                        session.session_id,
                        EventKind.TTS_CHUNK,
                        TtsChunkPayload(
                            turn_id=turn_id,
                            clause_index=clause,
                            chunk_index=i,
                            pcm=piece,
                        ),
                    )
                queue.emitted_ms += pcm_duration_ms(pcm)
                queue.next_emit_index += 1
            await self._maybe_finish(turn_id, queue)

    async def _maybe_finish(self, turn_id: int, queue: PlaybackQueue) -> None:
        if (
            queue.expected_clauses is not None
            and queue.next_emit_index >= queue.expected_clauses
            and not queue.done_published
            and turn_id not in self._dead_turns
        ):
            queue.done_published = True
            self.session.pipeline.playback_active = False
            await self.session.bus.emit(
                self.session.session_id,
                EventKind.TTS_DONE,
                TtsDonePayload(
                    turn_id=turn_id,
                    clause_count=queue.expected_clauses,
                    total_ms=queue.emitted_ms,
                ),
            )

    async def _on_llm_done(self, turn_id: int, clause_count: int) -> None:
        if turn_id in self._dead_turns:
            return
        queue = self._turns.setdefault(turn_id, PlaybackQueue())
        queue.expected_clauses = clause_count
        await self._drain(turn_id)

    # -- cancellation --

    def cancel_turn(self, turn_id: int) -> None:
        """Idempotent: mark dead, abandon in-flight synthesis, clear the
        reorder buffer. No chunk for this turn is emitted afterward."""
        self._dead_turns.add(turn_id)
        for (t, c), task in list(self._synth_tasks.items()):
            if t == turn_id and not task.done():
                task.cancel()
        for (t, c), job in list(self._jobs.items()):
            if t == turn_id and job.status in ("queued", "synthesizing"):
                job.status = "cancelled"
        queue = self._turns.pop(turn_id, None)
        if queue is not None and self.session.pipeline.playback_active:
            self.session.pipeline.playback_active = False

    def playback_state(self, turn_id: int) -> PlaybackQueue | None:
        return self._turns.get(turn_id)

    async def aclose(self) -> None:
        tasks = list(self._synth_tasks.values())
        for task in tasks:
            task.cancel()
        for task in tasks:
            try:
                await task
            except (asyncio.CancelledError, Exception):
                pass
