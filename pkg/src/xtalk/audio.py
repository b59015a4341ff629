"""PCM audio frames and spans.

All audio in the engine is 16 kHz mono signed 16-bit little-endian PCM.
Scripted utterances encode a sidecar tag into the sample values (every
sample of an utterance holds the same nonzero tag), so tags survive
chunking and wire transfer bit-exactly while the payload stays valid PCM.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

SAMPLE_RATE = 16000
BYTES_PER_SAMPLE = 2
BYTES_PER_MS = SAMPLE_RATE * BYTES_PER_SAMPLE // 1000  # 32


@dataclass(frozen=True)
class AudioFrame:
    """One chunk of mono PCM."""

    pcm: bytes
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        if len(self.pcm) % BYTES_PER_SAMPLE:
            raise ValueError("PCM length must be a multiple of 2 bytes")

    @property
    def sample_count(self) -> int:
        return len(self.pcm) // BYTES_PER_SAMPLE

    @property
    def duration_ms(self) -> float:
        # sample_count / 16 is exact for 16 kHz input
        return self.sample_count / (self.sample_rate // 1000)

    @property
    def tag(self) -> int:
        """Sidecar utterance tag, 0 when the frame is silence/untagged."""
        if not self.pcm:
            return 0
        return struct.unpack_from("<h", self.pcm, 0)[0]


@dataclass(frozen=True)
class AudioSpan:
    """A contiguous stretch of utterance audio handed to a recognizer.

    ``start_ms``/``end_ms`` are offsets within the utterance, so a span
    that begins after a buffer flush still knows its absolute position.
    """

    frames: tuple[AudioFrame, ...]
    start_ms: float
    end_ms: float

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms

    @property
    def tag(self) -> int:
        for frame in self.frames:
            if frame.tag:
                return frame.tag
        return 0

    def pcm(self) -> bytes:
        return b"".join(f.pcm for f in self.frames)


def tagged_pcm(tag: int, duration_ms: float) -> bytes:
    """Synthesize PCM for a scripted utterance: every sample equals ``tag``."""
    if not 0 < tag <= 0x7FFF:
        raise ValueError(f"tag out of int16 range: {tag}")
    n = int(duration_ms * SAMPLE_RATE / 1000)
    return struct.pack("<h", tag) * n


def silence_pcm(duration_ms: float) -> bytes:
    n = int(duration_ms * SAMPLE_RATE / 1000)
    return b"\x00\x00" * n


def pcm_duration_ms(pcm: bytes) -> float:
    return len(pcm) / BYTES_PER_MS


def split_pcm(pcm: bytes, chunk_ms: int) -> list[bytes]:
    """Cut PCM into chunk_ms pieces; the final piece may be shorter."""
    step = chunk_ms * BYTES_PER_MS
    return [pcm[i : i + step] for i in range(0, len(pcm), step)] if pcm else []
