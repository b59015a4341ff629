"""Mock language model: a deterministic script interpreter.

``stream(prompt)`` yields items at token pacing. A rule's items are
either text (auto-tokenized), a tool call, or a thinking directive. Rules
match against the portion of the prompt after the last input marker, so
history from earlier turns never re-triggers a rule.
"""

from __future__ import annotations

import asyncio
import random
from dataclasses import dataclass
from typing import AsyncIterator

from .corpus import ScenarioCorpus, tokenize_response
from .profiles import LatencyProfile

INPUT_MARKER = "[input]"


@dataclass(frozen=True)
class LlmItem:
    """One element of a scripted generation stream."""

    kind: str  # "token" | "tool_call" | "think"
    text: str = ""
    tool_name: str = ""
    tool_args: dict | None = None


def script_items(corpus: ScenarioCorpus, request: str) -> list[LlmItem]:
    """Expand the matched rule into the item stream for a request."""
    rule = corpus.match_rule(request)
    items: list[LlmItem] = []
    for raw in rule.items:
        if "say" in raw:
            for token in tokenize_response(raw["say"]):
                items.append(LlmItem(kind="token", text=token))
        elif "tool_call" in raw:
            call = raw["tool_call"]
            items.append(
                LlmItem(
                    kind="tool_call",
                    tool_name=call["name"],
                    tool_args=dict(call.get("args", {})),
                )
            )
        elif "think" in raw:
            items.append(LlmItem(kind="think"))
        else:
            raise ValueError(f"unknown llm script item: {raw}")
    return items


class MockLlmBackend:
    def __init__(
        self,
        corpus: ScenarioCorpus,
        profile: LatencyProfile,
        seed: int = 0,
    ) -> None:
        self.corpus = corpus
        self.profile = profile
        self._rng = random.Random(seed)
        self.call_log: list[str] = []

    async def stream(self, prompt: str) -> AsyncIterator[LlmItem]:
        """Yield scripted items with fixed_ms lead-in and per-item spacing."""
        self.call_log.append(prompt)
        request = prompt.rsplit(INPUT_MARKER, 1)[-1]
        items = script_items(self.corpus, request)

        first = True
        for item in items:
            delay_ms = self.profile.fixed_ms if first else self.profile.per_unit_ms
            if self.profile.jitter_ms:
                delay_ms += self._rng.uniform(0.0, self.profile.jitter_ms)
            if delay_ms > 0:
                await asyncio.sleep(delay_ms / 1000.0)
            first = False
            yield item


class MockThinker:
    """Deliberation backend invoked off the critical path."""

    def __init__(self, corpus: ScenarioCorpus, profile: LatencyProfile) -> None:
        self.corpus = corpus
        self.profile = profile

    async def think(self, query: str) -> str:
        await self.profile.apply(0.0)
        return self.corpus.thinking_summary
