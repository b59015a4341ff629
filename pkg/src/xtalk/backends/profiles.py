"""Latency profiles for mock backends."""

from __future__ import annotations

import asyncio
import random
from dataclasses import dataclass


@dataclass(frozen=True)
class LatencyProfile:
    """Synthetic call cost: fixed base plus a per-unit term plus jitter.

    The unit is backend-specific: audio seconds for recognizers, tokens
    for language models, characters for synthesizers.
    """

    fixed_ms: float = 0.0
    per_unit_ms: float = 0.0
    jitter_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.fixed_ms < 0 or self.per_unit_ms < 0 or self.jitter_ms < 0:
            raise ValueError("latency profile values must be non-negative")

    def delay_ms(self, units: float, rng: random.Random | None = None) -> float:
        delay = self.fixed_ms + self.per_unit_ms * units
        if self.jitter_ms and rng is not None:
            delay += rng.uniform(0.0, self.jitter_ms)
        return delay

    async def apply(self, units: float, rng: random.Random | None = None) -> float:
        delay = self.delay_ms(units, rng)
        if delay > 0:
            await asyncio.sleep(delay / 1000.0)
        return delay

    @classmethod
    def from_dict(cls, d: dict) -> "LatencyProfile":
        return cls(
            fixed_ms=float(d.get("fixed_ms", 0.0)),
            per_unit_ms=float(d.get("per_unit_ms", 0.0)),
            jitter_ms=float(d.get("jitter_ms", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "fixed_ms": self.fixed_ms,
            "per_unit_ms": self.per_unit_ms,
            "jitter_ms": self.jitter_ms,
        }
