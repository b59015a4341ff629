"""Mock speech recognizers.

Contract (model-agnostic): ``recognize(span) -> text`` for offline-style
use, plus an optional native-streaming capability exposed through
``recognize_streaming(state, frame) -> partial text``.

The offline mock waits ``fixed + per_unit * span_seconds`` and returns the
sidecar transcript cut at the alignment boundaries covering the span, so
longer spans yield prefix-extending transcripts. The streaming mock bills
only new audio per call.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..audio import AudioFrame, AudioSpan
from ..errors import BackendFailure, UntaggedAudio
from .corpus import ScenarioCorpus
from .profiles import LatencyProfile


@dataclass
class _CallRecord:
    tag: int
    start_ms: float
    end_ms: float


class MockAsrBackend:
    """Offline recognizer over the scripted corpus."""

    streaming = False

    def __init__(
        self,
        corpus: ScenarioCorpus,
        profile: LatencyProfile,
        seed: int = 0,
    ) -> None:
        self.corpus = corpus
        self.profile = profile
        self._rng = random.Random(seed)
        self.call_log: list[_CallRecord] = []
        self._fail_next = 0

    def inject_failures(self, count: int) -> None:
        self._fail_next = count

    async def recognize(self, span: AudioSpan) -> str:
        if span.duration_ms <= 0 or not span.frames:
            return ""
        tag = span.tag
        if tag == 0:
            raise UntaggedAudio("audio span carries no sidecar tag")
        await self.profile.apply(span.duration_ms / 1000.0, self._rng)
        if self._fail_next > 0:
            self._fail_next -= 1
            raise BackendFailure("injected recognizer failure")
        self.call_log.append(_CallRecord(tag, span.start_ms, span.end_ms))
        utt = self.corpus.utterance(tag)
        return utt.slice_text(span.start_ms, span.end_ms)


@dataclass
class StreamState:
    """Caller-held state for one native-streaming recognition stream."""

    tag: int = 0
    consumed_ms: float = 0.0
    frames: list[AudioFrame] = field(default_factory=list)


class MockStreamingAsrBackend:
    """Natively streaming recognizer: partials grow per fed chunk."""

    streaming = True

    def __init__(
        self,
        corpus: ScenarioCorpus,
        profile: LatencyProfile,
        seed: int = 0,
    ) -> None:
        self.corpus = corpus
        self.profile = profile
        self._rng = random.Random(seed)
        self.call_log: list[_CallRecord] = []

    def open_stream(self) -> StreamState:
        return StreamState()

    async def recognize_streaming(
        self, state: StreamState, frame: AudioFrame | None
    ) -> str:
        """Feed one chunk (or None to flush) and return the cumulative text."""
        new_ms = 0.0
        if frame is not None:
            state.frames.append(frame)
            if state.tag == 0:
                state.tag = frame.tag
            new_ms = frame.duration_ms
        await self.profile.apply(new_ms / 1000.0, self._rng)
        state.consumed_ms += new_ms
        if state.tag == 0:
            return ""
        self.call_log.append(_CallRecord(state.tag, 0.0, state.consumed_ms))
        utt = self.corpus.utterance(state.tag)
        if frame is None:
            # flush: the full transcript is committed
            return utt.text if state.consumed_ms >= utt.duration_ms - 1.0 else utt.slice_text(0.0, state.consumed_ms)
        return utt.slice_text(0.0, state.consumed_ms)
