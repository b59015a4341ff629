"""Side-channel backends: scene captioner, caption rewriter, speaker embedder."""

from __future__ import annotations

import numpy as np

from ..audio import AudioFrame
from ..errors import BackendFailure
from .corpus import ScenarioCorpus
from .profiles import LatencyProfile


class MockCaptioner:
    """Maps the dominant scene tag of an audio window to a scripted caption."""

    def __init__(self, corpus: ScenarioCorpus, profile: LatencyProfile) -> None:
        self.corpus = corpus
        self.profile = profile
        self._fail_next = 0

    def inject_failures(self, count: int) -> None:
        self._fail_next = count

    async def caption(self, frames: list[AudioFrame]) -> str | None:
        tags = [f.tag for f in frames if f.tag]
        if not tags:
            return None
        await self.profile.apply(sum(f.duration_ms for f in frames) / 1000.0)
        if self._fail_next > 0:
            self._fail_next -= 1
            raise BackendFailure("injected captioner failure")
        # Most recent tagged utterance wins.
        utt = self.corpus.utterance(tags[-1])
        scene = self.corpus.scenes.get(utt.scene)
        return scene["caption"] if scene else None


class CaptionRewriter:
    """Condenses a verbose caption into the scripted summary form."""

    def __init__(self, corpus: ScenarioCorpus, profile: LatencyProfile) -> None:
        self.corpus = corpus
        self.profile = profile

    async def rewrite(self, text: str) -> str:
        await self.profile.apply(0.0)
        for scene in self.corpus.scenes.values():
            if scene.get("caption") == text and scene.get("rewritten"):
                return scene["rewritten"]
        return text


class MockSpeakerEmbedder:
    """Deterministic unit embedding from an utterance's scripted voice tag."""

    def __init__(self, corpus: ScenarioCorpus, profile: LatencyProfile) -> None:
        self.corpus = corpus
        self.profile = profile

    async def embed(self, frames: list[AudioFrame]) -> np.ndarray | None:
        tags = [f.tag for f in frames if f.tag]
        if not tags:
            return None
        await self.profile.apply(sum(f.duration_ms for f in frames) / 1000.0)
        utt = self.corpus.utterance(tags[0])
        vec = self.corpus.speaker_vectors.get(utt.voice)
        return None if vec is None else vec.copy()
