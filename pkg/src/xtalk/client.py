"""Scriptable client for tests, the bench harness, and replay.

Speaks the exact wire protocol over any Connection (loopback or real
WebSocket). Collects every received frame, decoded, in arrival order.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field

from .audio import AudioFrame, split_pcm, tagged_pcm
from .backends import ScenarioCorpus, Utterance
from .errors import ScenarioMissing
from .protocol import ClientMessage, ServerMessage, decode_server_frame, encode_client_message
from .transport import Connection

logger = logging.getLogger(__name__)


@dataclass
class ReceivedChunk:
    turn_id: int
    clause_index: int
    chunk_index: int
    pcm: bytes


@dataclass
class ClientLog:
    frames: list[ServerMessage] = field(default_factory=list)
    raw_frames: list[str | bytes] = field(default_factory=list)
    chunks: list[ReceivedChunk] = field(default_factory=list)

    def of_type(self, msg_type: str) -> list[ServerMessage]:
        return [m for m in self.frames if m.msg_type == msg_type]

    def chunks_for_turn(self, turn_id: int) -> list[ReceivedChunk]:
        return [c for c in self.chunks if c.turn_id == turn_id]


class LoopbackClient:
    """Drives one session like a frontend would."""

    def __init__(self, conn: Connection, corpus: ScenarioCorpus, chunk_ms: int = 100) -> None:
        self.conn = conn
        self.corpus = corpus
        self.chunk_ms = chunk_ms
        self.log = ClientLog()
        self.session_id: str | None = None
        self._seq = 0
        self._new_frame = asyncio.Condition()
        self._reader: asyncio.Task | None = None
        self._closed = False

    # -- lifecycle --

    async def hello(self, timeout: float = 5.0) -> str:
        await self._send_json("hello", {"client": "loopback"})
        self._reader = asyncio.create_task(self._read_loop(), name="client-reader")
        ack = await self.await_frame(
            lambda m: m.msg_type in ("hello_ack", "error"), timeout=timeout
        )
        if ack.msg_type == "error":
            raise ConnectionError(ack.payload.get("code", "error"))
        self.session_id = ack.payload["session_id"]
        return self.session_id

    async def bye(self) -> None:
        await self._send_json("bye", {})

    async def close(self) -> None:
        self._closed = True
        await self.conn.close()
        if self._reader:
            self._reader.cancel()
            try:
                await self._reader
            except asyncio.CancelledError:
                pass

    # -- speaking --

    async def send_audio_pcm(self, pcm: bytes) -> None:
        for piece in split_pcm(pcm, self.chunk_ms):
            self._seq += 1
            frame = encode_client_message(
                ClientMessage("audio", self._seq, AudioFrame(piece))
            )
            await self.conn.send(frame)

    async def vad_start(self) -> None:
        await self._send_json("vad_start", {})

    async def vad_end(self) -> None:
        await self._send_json("vad_end", {})

    async def speak(
        self,
        utterance: Utterance | int,
        wait: str | None = "final",
        timeout: float = 30.0,
        expect_partials: bool = True,
    ) -> ServerMessage | None:
        """Stream one scripted utterance: vad_start, audio, vad_end.

        With partials expected, vad_end is held until the recognizer's
        partial text covers the full transcript (the realistic
        endpointing order: the silence threshold fires after recognition
        caught up); wait="final" additionally returns once asr_final
        lands. Offline recognizers emit no partials: pass
        expect_partials=False.
        """
        utt = self.corpus.utterance(utterance) if isinstance(utterance, int) else utterance
        start_pos = len(self.log.frames)
        await self.vad_start()
        await self.send_audio_pcm(tagged_pcm(utt.tag, utt.duration_ms))
        if expect_partials and wait in ("partials", "final"):
            await self.await_frame(
                lambda m: m.msg_type == "asr_partial"
                and m.payload["finalized"] + m.payload["volatile"] == utt.text,
                timeout=timeout,
                since=start_pos,
            )
        await self.vad_end()
        if wait == "final":
            return await self.await_frame(
                lambda m: m.msg_type == "asr_final", timeout=timeout, since=start_pos
            )
        return None

    async def barge_in_button(self) -> None:
        await self._send_json("barge_in", {})

    async def text_input(self, text: str) -> None:
        await self._send_json("text_input", {"text": text})

    async def send_config(self, delta: dict) -> None:
        await self._send_json("config", delta)

    # -- waiting on server frames --

    async def await_frame(
        self,
        predicate,
        timeout: float = 30.0,
        skip: int = 0,
        since: int = 0,
    ) -> ServerMessage:
        """First frame at/after log index `since` matching predicate,
        past `skip` matches."""
        _, msg = await self.await_frame_indexed(predicate, timeout, skip, since)
        return msg

    async def await_frame_indexed(
        self,
        predicate,
        timeout: float = 30.0,
        skip: int = 0,
        since: int = 0,
    ) -> tuple[int, ServerMessage]:
        deadline = asyncio.get_running_loop().time() + timeout
        seen = 0
        scanned = since
        async with self._new_frame:
            while True:
                while scanned < len(self.log.frames):
                    msg = self.log.frames[scanned]
                    scanned += 1
                    if predicate(msg):
                        if seen >= skip:
                            return scanned - 1, msg
                        seen += 1
                remaining = deadline - asyncio.get_running_loop().time()
                if remaining <= 0:
                    raise asyncio.TimeoutError(
                        f"no matching frame within {timeout}s ({len(self.log.frames)} seen)"
                    )
                try:
                    await asyncio.wait_for(self._new_frame.wait(), remaining)
                except asyncio.TimeoutError:
                    raise asyncio.TimeoutError(
                        f"no matching frame within {timeout}s ({len(self.log.frames)} seen)"
                    ) from None

    async def await_turn_done(self, timeout: float = 30.0) -> ServerMessage:
        return await self.await_frame(lambda m: m.msg_type == "tts_done", timeout=timeout)

    async def await_chunks(self, count: int, timeout: float = 30.0) -> None:
        deadline = asyncio.get_running_loop().time() + timeout
        async with self._new_frame:
            while len(self.log.chunks) < count:
                remaining = deadline - asyncio.get_running_loop().time()
                if remaining <= 0:
                    raise asyncio.TimeoutError(f"only {len(self.log.chunks)} chunks arrived")
                await asyncio.wait_for(self._new_frame.wait(), remaining)

    # -- internals --

    async def _send_json(self, msg_type: str, payload: dict) -> None:
        self._seq += 1
        await self.conn.send(encode_client_message(ClientMessage(msg_type, self._seq, payload)))

    async def _read_loop(self) -> None:
        try:
            while True:
                frame = await self.conn.recv()
                if frame is None:
                    break
                msg = decode_server_frame(frame)
                async with self._new_frame:
                    self.log.raw_frames.append(frame)
                    self.log.frames.append(msg)
                    if msg.msg_type == "tts_chunk":
                        self.log.chunks.append(
                            ReceivedChunk(
                                turn_id=msg.turn_id,
                                clause_index=msg.payload["clause_index"],
                                chunk_index=msg.payload["chunk_index"],
                                pcm=msg.payload["pcm"],
                            )
                        )
                    self._new_frame.notify_all()
        except asyncio.CancelledError:
            pass


async def open_loopback(runtime, timeout: float = 5.0):
    """In-process connection + handshake against an AppRuntime.

    Returns (client, session); the session object gives tests and the
    bench harness direct access to server-side traces.
    """
    from .transport import LoopbackConnection

    client_side, server_side = LoopbackConnection.pair()
    client = LoopbackClient(client_side, runtime.corpus, runtime.config.chunk_ms)
    hello_task = asyncio.create_task(client.hello(timeout=timeout))
    session = await runtime.accept(server_side)
    if session is None:
        try:
            await hello_task
        finally:
            await client.close()
        raise ConnectionError("handshake rejected")
    session.start_input()
    await hello_task
    return client, session


def utterance_or_missing(corpus: ScenarioCorpus, tag: int) -> Utterance:
    if tag not in corpus.utterances:
        raise ScenarioMissing(f"utterance tag {tag}")
    return corpus.utterances[tag]
