"""Shared fixtures: corpora, fast latency configs, loopback harness."""

from __future__ import annotations

import asyncio

import pytest
import pytest_asyncio

from xtalk.backends import ScenarioCorpus
from xtalk.backends.profiles import LatencyProfile
from xtalk.client import LoopbackClient, open_loopback
from xtalk.config import (
    AppConfig,
    AsrConfig,
    DEFAULT_SCENARIO_DIR,
    LlmConfig,
    SideChannelConfig,
    TtsConfig,
)
from xtalk.runtime import AppRuntime


@pytest.fixture(scope="session")
def corpus() -> ScenarioCorpus:
    return ScenarioCorpus.load(DEFAULT_SCENARIO_DIR)


def fast_config(**overrides) -> AppConfig:
    """Millisecond-scale latencies so integration tests stay quick."""
    base = AppConfig(
        asr=AsrConfig(
            mode="pseudo_streaming",
            window_w=3,
            latency=LatencyProfile(1.0, 0.5),
            streaming_latency=LatencyProfile(2.0, 0.0),
            offline_latency=LatencyProfile(2.0, 10.0),
        ),
        llm=LlmConfig(
            latency=LatencyProfile(4.0, 0.5),
            thinking_latency=LatencyProfile(50.0, 0.0),
        ),
        tts=TtsConfig(latency=LatencyProfile(6.0, 0.2)),
        side_channels=SideChannelConfig(
            caption_period_ms=10_000.0,
            captioner_latency=LatencyProfile(5.0, 0.0),
            embedder_latency=LatencyProfile(1.0, 0.0),
            rewriter_latency=LatencyProfile(1.0, 0.0),
        ),
    )
    if overrides:
        import dataclasses

        base = dataclasses.replace(base, **overrides)
    return base


@pytest.fixture
def quick_config() -> AppConfig:
    return fast_config()


class Harness:
    """Owns one runtime and every loopback client opened through it."""

    def __init__(self, config: AppConfig, corpus: ScenarioCorpus | None = None) -> None:
        self.runtime = AppRuntime(config, corpus)
        self._clients: list[LoopbackClient] = []

    async def client(self) -> tuple[LoopbackClient, object]:
        client, session = await open_loopback(self.runtime)
        self._clients.append(client)
        return client, session

    async def aclose(self) -> None:
        await self.runtime.aclose()
        for client in self._clients:
            await client.close()


@pytest_asyncio.fixture
async def harness(quick_config, corpus):
    h = Harness(quick_config, corpus)
    yield h
    await h.aclose()


async def settle(predicate, timeout: float = 5.0, interval: float = 0.005) -> None:
    """Poll until predicate() is true or fail the test."""
    deadline = asyncio.get_running_loop().time() + timeout
    while not predicate():
        if asyncio.get_running_loop().time() > deadline:
            raise AssertionError("condition did not settle in time")
        await asyncio.sleep(interval)
