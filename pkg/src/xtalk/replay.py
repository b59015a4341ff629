"""Scripted session replay and normalized frame logging.

A session scenario is a JSON list of client steps. The runner drives a
loopback client through them and emits one normalized line per received
frame, stable across runs: timestamps and latency values never appear,
session ids collapse to a placeholder, audio chunks reduce to their
metadata plus a digest.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .backends.profiles import LatencyProfile
from .client import LoopbackClient, open_loopback
from .config import AppConfig, AsrConfig, LlmConfig, SideChannelConfig, TtsConfig
from .errors import ScenarioMissing
from .protocol import decode_server_frame
from .runtime import AppRuntime

SESSIONS_DIR = Path(__file__).parent / "scenarios" / "sessions"

_VOLATILE_TYPES = {"metric"}
_VOLATILE_KEYS = {"session_id"}


@dataclass(frozen=True)
class SessionScenario:
    name: str
    steps: tuple[dict, ...]

    @classmethod
    def load(cls, path: str | Path) -> "SessionScenario":
        p = Path(path)
        if not p.exists():
            candidate = SESSIONS_DIR / f"{path}.json"
            if candidate.exists():
                p = candidate
            else:
                raise ScenarioMissing(str(path))
        data = json.loads(p.read_text(encoding="utf-8"))
        return cls(name=data.get("name", p.stem), steps=tuple(data.get("steps", ())))


def replay_config() -> AppConfig:
    """Deterministic profile for golden-log replays: zero jitter and wide
    timing margins between concurrent completions."""
    return AppConfig(
        asr=AsrConfig(mode="pseudo_streaming", window_w=3, latency=LatencyProfile(5.0, 2.0)),
        llm=LlmConfig(
            latency=LatencyProfile(40.0, 2.0),
            thinking_latency=LatencyProfile(300.0, 0.0),
        ),
        tts=TtsConfig(latency=LatencyProfile(400.0, 0.0)),
        side_channels=SideChannelConfig(
            caption_period_ms=10_000.0,
            captioner_latency=LatencyProfile(50.0, 0.0),
            # Zero-cost side calls publish inside their own handler turn,
            # so their frame position never races timer wakeups.
            embedder_latency=LatencyProfile(0.0, 0.0),
            rewriter_latency=LatencyProfile(0.0, 0.0),
        ),
    )


def normalize_frame(frame: str | bytes) -> str | None:
    """One stable log line per frame; None for lines normalized away."""
    if isinstance(frame, (bytes, bytearray)):
        msg = decode_server_frame(bytes(frame))
        pcm = msg.payload["pcm"]
        digest = hashlib.sha256(pcm).hexdigest()[:8]
        return (
            f"bin tts_chunk turn={msg.turn_id} clause={msg.payload['clause_index']} "
            f"chunk={msg.payload['chunk_index']} bytes={len(pcm)} sha={digest}"
        )
    obj = json.loads(frame)
    if obj.get("type") in _VOLATILE_TYPES:
        return None
    payload = obj.get("payload", {})
    if isinstance(payload, dict):
        payload = {k: ("<id>" if k in _VOLATILE_KEYS else v) for k, v in payload.items()}
    return json.dumps(
        {"type": obj.get("type"), "turn_id": obj.get("turn_id", 0), "payload": payload},
        ensure_ascii=False,
        sort_keys=True,
    )


def normalize_log(raw_frames: list[str | bytes]) -> list[str]:
    lines = []
    for frame in raw_frames:
        line = normalize_frame(frame)
        if line is not None:
            lines.append(line)
    return lines


async def execute_steps(client: LoopbackClient, steps: tuple[dict, ...]) -> None:
    cursor = 0
    for step in steps:
        op = step["op"]
        if op == "speak":
            await client.speak(
                step["tag"],
                wait=step.get("wait", "final"),
                expect_partials=step.get("expect_partials", True),
            )
        elif op == "await_turn_done":
            idx, _ = await client.await_frame_indexed(
                lambda m: m.msg_type == "tts_done", since=cursor
            )
            cursor = idx + 1
        elif op == "await_frame":
            want = step["type"]
            idx, _ = await client.await_frame_indexed(
                lambda m: m.msg_type == want, since=cursor
            )
            cursor = idx + 1
        elif op == "await_chunks":
            await client.await_chunks(step["count"])
        elif op == "sleep_ms":
            await asyncio.sleep(step["ms"] / 1000.0)
        elif op == "text":
            await client.text_input(step["text"])
        elif op == "config":
            await client.send_config(step["delta"])
        elif op == "bye":
            await client.bye()
        else:
            raise ScenarioMissing(f"unknown scenario op {op!r}")


async def run_scenario(
    scenario: SessionScenario | str | Path, config: AppConfig | None = None
) -> list[str]:
    """Drive one scripted session against a fresh runtime; returns the
    normalized frame log."""
    if not isinstance(scenario, SessionScenario):
        scenario = SessionScenario.load(scenario)
    runtime = AppRuntime(config or replay_config())
    if not scenario.steps:
        return []
    client, session = await open_loopback(runtime)
    try:
        await execute_steps(client, scenario.steps)
        # Wait for the close handshake AND for the client to drain every
        # frame already in flight before snapshotting the log.
        stable = 0
        last = -1
        for _ in range(500):
            count = len(client.log.raw_frames)
            if session.closed and count == last:
                stable += 1
                if stable >= 5:
                    break
            else:
                stable = 0
            last = count
            await asyncio.sleep(0.01)
    finally:
        await client.close()
        await runtime.aclose()
    return normalize_log(client.log.raw_frames)


def list_scenarios() -> list[str]:
    return sorted(p.stem for p in SESSIONS_DIR.glob("*.json"))
