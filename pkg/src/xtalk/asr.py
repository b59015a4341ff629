"""Speech recognition stage.

Three operating modes behind one manager:

  streaming         the backend natively emits growing partials per chunk
  pseudo_streaming  an offline backend is re-invoked on the cumulative
                    unflushed buffer; a sliding window of hypotheses
                    finalizes the stable prefix, and audio whose text is
                    finalized up to a sentence boundary is flushed so it
                    is never re-sent
  offline           a single recognition at utterance end

The pseudo-streaming rule: the stable prefix is the longest common prefix
of the last W full-buffer hypotheses. Finalized text is append-only
within an utterance. Flushing maps text to audio proportionally by
character count and only fires when the stable prefix ends at
sentence-final punctuation.
"""

from __future__ import annotations

import asyncio
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .audio import AudioFrame, AudioSpan, BYTES_PER_SAMPLE, SAMPLE_RATE
from .errors import BackendFailure, DuplicateMark
from .events import (
    AsrFinalPayload,
    AsrPartialPayload,
    EventKind,
    MetricPayload,
)
from .textutil import SENTENCE_BOUNDARY, longest_common_prefix

if TYPE_CHECKING:
    from .session import Session

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StabilityWindow:
    """Number of consecutive hypotheses that must agree before finalizing."""

    w: int = 3

    def __post_init__(self) -> None:
        if self.w < 2:
            raise ValueError("stability window must be at least 2")


def stable_prefix(hypotheses: list[str], window: StabilityWindow | int) -> str:
    """Longest common prefix of the most recent W hypotheses.

    Returns "" until W hypotheses exist.
    """
    w = window.w if isinstance(window, StabilityWindow) else window
    if len(hypotheses) < w:
        return ""
    return longest_common_prefix(list(hypotheses)[-w:])


@dataclass
class TranscriptState:
    """Mutable per-utterance recognition state.

    ``finalized_text`` is absolute for the utterance and append-only.
    ``flushed_chars`` counts the finalized characters whose audio has
    been flushed; hypotheses in the cache are relative to the flush
    point.
    """

    window: int = 3
    frames: list[AudioFrame] = field(default_factory=list)
    total_ms: float = 0.0
    flushed_ms: float = 0.0
    finalized_text: str = ""
    flushed_chars: int = 0
    hypothesis_cache: deque[str] = field(default_factory=deque)
    volatile_text: str = ""
    open: bool = False

    def __post_init__(self) -> None:
        self.hypothesis_cache = deque(self.hypothesis_cache, maxlen=self.window)

    @property
    def pending_rel(self) -> str:
        """Finalized text not yet backed by flushed audio (flush-relative)."""
        return self.finalized_text[self.flushed_chars :]

    def reset(self) -> None:
        self.frames.clear()
        self.total_ms = 0.0
        self.flushed_ms = 0.0
        self.finalized_text = ""
        self.flushed_chars = 0
        self.hypothesis_cache.clear()
        self.volatile_text = ""
        self.open = False

    def unflushed_span(self) -> AudioSpan:
        return AudioSpan(tuple(self.frames), self.flushed_ms, self.total_ms)


@dataclass(frozen=True)
class PartialUpdate:
    finalized: str
    volatile: str
    failed: bool = False


@dataclass(frozen=True)
class FinalResult:
    text: str
    utterance_ms: float
    degraded: bool = False


class PseudoStreamer:
    """Cumulative re-inference with stable-prefix finalization and flush."""

    def __init__(self, backend, window: StabilityWindow | int = 3) -> None:
        self.backend = backend
        self.window = window.w if isinstance(window, StabilityWindow) else window

    def new_state(self) -> TranscriptState:
        return TranscriptState(window=self.window, open=True)

    async def on_audio_chunk(
        self, chunk: AudioFrame | list[AudioFrame], state: TranscriptState
    ) -> PartialUpdate:
        """Append audio, re-recognize the unflushed buffer, finalize, flush.

        A backend failure leaves the text state untouched (the audio is
        kept and covered by the next call) and is reported via the
        ``failed`` flag.
        """
        chunks = chunk if isinstance(chunk, list) else [chunk]
        for frame in chunks:
            state.frames.append(frame)
            state.total_ms += frame.duration_ms

        try:
            hyp = await self.backend.recognize(state.unflushed_span())
        except BackendFailure:
            return PartialUpdate(state.finalized_text, state.volatile_text, failed=True)

        state.hypothesis_cache.append(hyp)
        stable = stable_prefix(list(state.hypothesis_cache), self.window)

        pending = state.pending_rel
        if stable.startswith(pending) and len(stable) > len(pending):
            state.finalized_text += stable[len(pending) :]
            pending = state.pending_rel

        state.volatile_text = hyp[len(pending) :] if hyp.startswith(pending) else hyp

        if pending and hyp and pending[-1] in SENTENCE_BOUNDARY:
            self._flush(state, pending, hyp)

        return PartialUpdate(state.finalized_text, state.volatile_text)

    def _flush(self, state: TranscriptState, pending: str, hyp: str) -> None:
        """Flush the audio proportional to the finalized character share.

        The flush boundary snaps to the sample grid so the remaining PCM
        stays a valid span.
        """
        buffer_ms = state.total_ms - state.flushed_ms
        flush_ms = buffer_ms * len(pending) / len(hyp)
        samples = round((state.flushed_ms + flush_ms) * SAMPLE_RATE / 1000.0)
        new_flushed = samples * 1000.0 / SAMPLE_RATE
        new_flushed = min(new_flushed, state.total_ms)

        self._drop_audio_before(state, new_flushed)
        state.flushed_ms = new_flushed
        state.flushed_chars = len(state.finalized_text)
        # Cache entries share the flushed prefix (it was their common
        # prefix); strip it so they stay comparable with future
        # hypotheses of the shortened buffer.
        stripped = [h[len(pending) :] if h.startswith(pending) else "" for h in state.hypothesis_cache]
        state.hypothesis_cache.clear()
        state.hypothesis_cache.extend(stripped)

    def _drop_audio_before(self, state: TranscriptState, boundary_ms: float) -> None:
        cut_ms = boundary_ms - state.flushed_ms
        frames = state.frames
        while frames and cut_ms > 0:
            head = frames[0]
            if head.duration_ms <= cut_ms + 1e-9:
                cut_ms -= head.duration_ms
                frames.pop(0)
            else:
                cut_bytes = round(cut_ms * SAMPLE_RATE / 1000.0) * BYTES_PER_SAMPLE
                frames[0] = AudioFrame(head.pcm[cut_bytes:])
                cut_ms = 0.0

    async def finalize_on_vad_end(self, state: TranscriptState) -> FinalResult:
        """One last recognition over the unflushed tail, then reset."""
        utterance_ms = state.total_ms
        degraded = False
        try:
            hyp = await self.backend.recognize(state.unflushed_span())
        except BackendFailure:
            hyp = state.pending_rel
            degraded = True
        pending = state.pending_rel
        tail = hyp[len(pending) :] if hyp.startswith(pending) else hyp
        text = state.finalized_text + tail
        state.reset()
        return FinalResult(text=text, utterance_ms=utterance_ms, degraded=degraded)


class AsrManager:
    """Per-session recognition manager.

    One worker drives backend calls strictly sequentially; chunks that
    arrive while a call is in flight are coalesced into the next call.
    """

    KINDS = frozenset({EventKind.AUDIO_IN, EventKind.VAD_START, EventKind.VAD_END})

    def __init__(self, session: "Session") -> None:
        self.session = session
        self.mode = session.config.asr.mode
        self._queue: asyncio.Queue[tuple[str, AudioFrame | None]] = asyncio.Queue()
        self._stream_state = None
        self._streamer: PseudoStreamer | None = None
        if self.mode == "pseudo_streaming":
            self._streamer = PseudoStreamer(
                session.backends.asr_offline,
                StabilityWindow(session.config.asr.window_w),
            )
        self._worker = asyncio.create_task(
            self._run(), name=f"asr-{session.session_id}"
        )

    @property
    def state(self) -> TranscriptState:
        return self.session.pipeline.transcript_state

    async def handle(self, event) -> None:
        if event.kind is EventKind.VAD_START:
            self._queue.put_nowait(("vad_start", None))
        elif event.kind is EventKind.AUDIO_IN:
            self._queue.put_nowait(("audio", event.payload.frame))
        elif event.kind is EventKind.VAD_END:
            self._queue.put_nowait(("vad_end", None))

    def _begin_utterance(self) -> None:
        st = self.state
        st.reset()
        st.open = True
        if self.mode == "streaming":
            self._stream_state = self.session.backends.asr_streaming.open_stream()

    async def _run(self) -> None:
        try:
            while True:
                op, frame = await self._queue.get()
                while op is not None:
                    op, frame = await self._step(op, frame)
        except asyncio.CancelledError:
            pass

    async def _step(
        self, op: str, frame: AudioFrame | None
    ) -> tuple[str | None, AudioFrame | None]:
        """Process one command; returns a deferred command when coalescing
        audio ran into a control marker."""
        if op == "vad_start":
            self._begin_utterance()
            return None, None
        if op == "vad_end":
            if self.state.open:
                await self._finalize()
            return None, None
        if not self.state.open:
            return None, None
        batch = [frame]
        deferred: tuple[str, AudioFrame | None] | None = None
        while True:
            try:
                nop, nframe = self._queue.get_nowait()
            except asyncio.QueueEmpty:
                break
            if nop == "audio":
                batch.append(nframe)
            else:
                deferred = (nop, nframe)
                break
        await self._process_batch(batch)
        return deferred if deferred else (None, None)

    async def _process_batch(self, batch: list[AudioFrame]) -> None:
        merged = batch[0] if len(batch) == 1 else AudioFrame(b"".join(f.pcm for f in batch))
        st = self.state
        if self.mode == "offline":
            st.frames.append(merged)
            st.total_ms += merged.duration_ms
            return
        if self.mode == "streaming":
            backend = self.session.backends.asr_streaming
            text = await backend.recognize_streaming(self._stream_state, merged)
            st.total_ms += merged.duration_ms
            st.finalized_text = text
            await self._publish_partial(text, "")
            return
        update = await self._streamer.on_audio_chunk(merged, st)
        if update.failed:
            await self._publish_metric("asr_backend_failure")
            return
        await self._publish_partial(update.finalized, update.volatile)

    async def _finalize(self) -> None:
        st = self.state
        sess = self.session
        if self.mode == "offline":
            utterance_ms = st.total_ms
            degraded = False
            try:
                text = await sess.backends.asr_offline.recognize(st.unflushed_span())
            except BackendFailure:
                text, degraded = "", True
            st.reset()
        elif self.mode == "streaming":
            utterance_ms = st.total_ms
            degraded = False
            text = await sess.backends.asr_streaming.recognize_streaming(
                self._stream_state, None
            )
            self._stream_state = None
            st.reset()
        else:
            result = await self._streamer.finalize_on_vad_end(st)
            text, utterance_ms, degraded = result.text, result.utterance_ms, result.degraded
            if degraded:
                await self._publish_metric("asr_backend_failure_final")
        try:
            sess.tracebook.mark("asr_final_at")
        except DuplicateMark:
            # Utterances arriving faster than finalization can race the
            # shared pending trace; losing a mark beats crashing the worker.
            pass
        await sess.bus.emit(
            sess.session_id,
            EventKind.ASR_FINAL,
            AsrFinalPayload(text=text, utterance_ms=utterance_ms, degraded=degraded),
        )

    async def _publish_partial(self, finalized: str, volatile: str) -> None:
        sess = self.session
        await sess.bus.emit(
            sess.session_id,
            EventKind.ASR_PARTIAL,
            AsrPartialPayload(
                turn_hint=sess.pipeline.turn_state.current_turn_id + 1,
                finalized=finalized,
                volatile=volatile,
            ),
        )

    async def _publish_metric(self, name: str) -> None:
        sess = self.session
        await sess.bus.emit(
            sess.session_id,
            EventKind.METRIC,
            MetricPayload(name=name, value=1.0),
        )

    async def aclose(self) -> None:
        self._worker.cancel()
        try:
            await self._worker
        except asyncio.CancelledError:
            pass
