"""Mock speech synthesizer.

Contract: ``synthesize(text, timbre, emotion) -> SynthResult`` plus the
``native_emotion_control`` capability flag. Output is silence PCM whose
duration is ceil(chars / chars_per_second) seconds; content is irrelevant
to orchestration and zero samples make loss-free accounting trivial.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from ..audio import silence_pcm
from ..errors import EmptyText
from .profiles import LatencyProfile


@dataclass(frozen=True)
class SynthResult:
    pcm: bytes
    sample_rate: int
    timbre: str
    emotion: str
    mechanism: str
    backend: str


class MockTtsBackend:
    def __init__(
        self,
        profile: LatencyProfile,
        chars_per_second: int = 5,
        native_emotion_control: bool = False,
        name: str = "mock_tts",
        seed: int = 0,
    ) -> None:
        if chars_per_second <= 0:
            raise ValueError("chars_per_second must be positive")
        self.profile = profile
        self.chars_per_second = chars_per_second
        self.native_emotion_control = native_emotion_control
        self.name = name
        self._rng = random.Random(seed)
        self.call_log: list[SynthResult] = []

    async def synthesize(self, text: str, timbre: str, emotion: str) -> SynthResult:
        if not text:
            raise EmptyText("cannot synthesize empty text")
        await self.profile.apply(len(text), self._rng)
        seconds = math.ceil(len(text) / self.chars_per_second)
        mechanism = "native_vector" if self.native_emotion_control else "reference_audio"
        result = SynthResult(
            pcm=silence_pcm(seconds * 1000.0),
            sample_rate=16000,
            timbre=timbre,
            emotion=emotion,
            mechanism=mechanism,
            backend=self.name,
        )
        self.call_log.append(result)
        return result
