"""Parallel understanding channels: scene captioning and speaker identity.

Both run per-session in their own tasks, publish to the bus, and are
never awaited by the recognition/generation/synthesis chain, so any
configured backend latency stays off the critical path.
"""

from __future__ import annotations

import asyncio
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .audio import AudioFrame
from .errors import BackendFailure
from .events import (
    CaptionPayload,
    EventKind,
    MetricPayload,
    SpeakerPayload,
)

if TYPE_CHECKING:
    from .session import Session

logger = logging.getLogger(__name__)


class RollingAudioBuffer:
    """Fixed-duration sliding window of recent audio; oldest frames evict."""

    def __init__(self, window_ms: float = 15_000.0) -> None:
        self.window_ms = window_ms
        self.frames: deque[AudioFrame] = deque()
        self.total_ms = 0.0

    def push(self, frame: AudioFrame) -> None:
        self.frames.append(frame)
        self.total_ms += frame.duration_ms
        while self.total_ms > self.window_ms and self.frames:
            evicted = self.frames.popleft()
            self.total_ms -= evicted.duration_ms

    def snapshot(self) -> list[AudioFrame]:
        return list(self.frames)


def ema_update(old: np.ndarray, observed: np.ndarray, alpha: float) -> np.ndarray:
    """normalize(alpha * observed + (1 - alpha) * old).

    A numerically zero blend returns the old embedding unchanged.
    """
    if old.shape != observed.shape:
        raise ValueError("embedding dimensions differ")
    blended = alpha * observed + (1.0 - alpha) * old
    norm = float(np.linalg.norm(blended))
    if norm < 1e-12:
        return old.copy()
    return blended / norm


@dataclass
class SpeakerRegistry:
    """Registered voiceprints with EMA adaptation on every re-match."""

    similarity_threshold: float = 0.6
    alpha: float = 0.1
    entries: dict[str, np.ndarray] = field(default_factory=dict)
    _next_id: int = 1

    def identify(self, embedding: np.ndarray) -> tuple[str, float, bool]:
        """Match against all entries; register a new speaker below the
        threshold. Returns (speaker_id, similarity, newly_registered)."""
        best_id, best_sim = None, -1.0
        for speaker_id, stored in self.entries.items():
            sim = float(np.dot(stored, embedding))
            if sim > best_sim:
                best_id, best_sim = speaker_id, sim
        if best_id is not None and best_sim >= self.similarity_threshold:
            self.entries[best_id] = ema_update(
                self.entries[best_id], embedding, self.alpha
            )
            return best_id, best_sim, False
        new_id = f"spk_{self._next_id:02d}"
        self._next_id += 1
        norm = float(np.linalg.norm(embedding))
        self.entries[new_id] = embedding / norm if norm > 0 else embedding
        return new_id, best_sim if self.entries else 1.0, True

    def to_dict(self) -> dict:
        return {sid: vec.tolist() for sid, vec in self.entries.items()}


class SideChannelManager:
    KINDS = frozenset(
        {EventKind.AUDIO_IN, EventKind.VAD_START, EventKind.ASR_FINAL}
    )

    def __init__(self, session: "Session") -> None:
        self.session = session
        cfg = session.config.side_channels
        self.buffer = session.pipeline.rolling_buffer
        self.registry = SpeakerRegistry(
            similarity_threshold=cfg.similarity_threshold, alpha=cfg.ema_alpha
        )
        self._utterance_frames: list[AudioFrame] = []
        self._caption_task: asyncio.Task | None = None
        self._caption_busy = False
        if cfg.captioner_enabled:
            self._caption_task = asyncio.create_task(
                self._caption_loop(), name=f"captioner-{session.session_id}"
            )

    async def handle(self, event) -> None:
        if event.kind is EventKind.AUDIO_IN:
            frame = event.payload.frame
            self.buffer.push(frame)
            self._utterance_frames.append(frame)
        elif event.kind is EventKind.VAD_START:
            self._utterance_frames = []
        elif event.kind is EventKind.ASR_FINAL:
            if self.session.config.side_channels.speaker_id_enabled:
                await self.identify_speaker(self._utterance_frames)

    # -- captioner --

    async def _caption_loop(self) -> None:
        period = self.session.config.side_channels.caption_period_ms / 1000.0
        try:
            while True:
                await asyncio.sleep(period)
                if not self._caption_busy:
                    self._caption_busy = True
                    try:
                        await self.tick_captioner()
                    finally:
                        self._caption_busy = False
        except asyncio.CancelledError:
            pass

    async def tick_captioner(self) -> None:
        """Caption the rolling window; an empty window produces nothing,
        a backend failure keeps the previous caption."""
        session = self.session
        frames = self.buffer.snapshot()
        try:
            text = await session.backends.captioner.caption(frames)
        except BackendFailure:
            await session.bus.emit(
                session.session_id,
                EventKind.METRIC,
                MetricPayload(name="captioner_failure", value=1.0),
            )
            return
        if text is None:
            return
        rewritten = False
        if session.config.side_channels.rewriter_enabled:
            text = await session.backends.rewriter.rewrite(text)
            rewritten = True
        session.pipeline.caption = text
        await session.bus.emit(
            session.session_id,
            EventKind.CAPTION_UPDATED,
            CaptionPayload(text=text, rewritten=rewritten),
        )

    # -- speaker identification --

    async def identify_speaker(self, frames: list[AudioFrame]) -> None:
        session = self.session
        embedding = await session.backends.embedder.embed(frames)
        if embedding is None:
            return
        speaker_id, similarity, new = self.registry.identify(embedding)
        session.pipeline.speaker_id = speaker_id
        await session.bus.emit(
            session.session_id,
            EventKind.SPEAKER_IDENTIFIED,
            SpeakerPayload(
                speaker_id=speaker_id,
                similarity=max(similarity, 0.0),
                newly_registered=new,
            ),
        )

    async def aclose(self) -> None:
        if self._caption_task and not self._caption_task.done():
            self._caption_task.cancel()
            try:
                await self._caption_task
            except asyncio.CancelledError:
                pass
