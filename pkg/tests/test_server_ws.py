"""The real WebSocket transport: handshake, sessions, capacity."""

from __future__ import annotations

import asyncio
import dataclasses
import json

import pytest
import websockets
from websockets.asyncio.client import connect

from conftest import fast_config

from xtalk.client import LoopbackClient
from xtalk.protocol import SUBPROTOCOL
from xtalk.runtime import AppRuntime
from xtalk.server import start_server


class WsClientConn:
    def __init__(self, ws) -> None:
        self.ws = ws

    async def send(self, frame):
        await self.ws.send(frame)

    async def recv(self):
        try:
            return await self.ws.recv()
        except websockets.exceptions.ConnectionClosed:
            return None

    async def close(self):
        await self.ws.close()


@pytest.fixture
async def ws_runtime(corpus):
    config = dataclasses.replace(fast_config(), listen="127.0.0.1:0")
    runtime = AppRuntime(config, corpus)
    server = await start_server(runtime)
    port = next(iter(server.sockets)).getsockname()[1]
    yield runtime, f"ws://127.0.0.1:{port}/session"
    server.close()
    await runtime.aclose()
    await server.wait_closed()


async def ws_client(runtime: AppRuntime, url: str) -> LoopbackClient:
    ws = await connect(url, subprotocols=[SUBPROTOCOL])
    assert ws.subprotocol == SUBPROTOCOL
    client = LoopbackClient(WsClientConn(ws), runtime.corpus, runtime.config.chunk_ms)
    await client.hello()
    return client


class TestWebSocket:
    async def test_handshake_returns_session_id(self, ws_runtime):
        runtime, url = ws_runtime
        client = await ws_client(runtime, url)
        assert client.session_id.startswith("s")
        await client.bye()
        await client.close()

    async def test_full_turn_over_websocket(self, ws_runtime):
        runtime, url = ws_runtime
        client = await ws_client(runtime, url)
        final = await client.speak(51, wait="final")
        assert final.payload["text"] == "今天天气怎么样"
        done = await client.await_turn_done()
        assert done.payload["clause_count"] == 2
        # binary audio survived the wire bit-exactly (all-zero PCM)
        assert client.log.chunks and set(b"".join(c.pcm for c in client.log.chunks)) == {0}
        await client.bye()
        await client.close()

    async def test_over_capacity_rejected_with_error_frame(self, corpus):
        config = dataclasses.replace(fast_config(), listen="127.0.0.1:0")
        config = dataclasses.replace(
            config, limiter=dataclasses.replace(config.limiter, max_sessions=1)
        )
        runtime = AppRuntime(config, corpus)
        server = await start_server(runtime)
        port = next(iter(server.sockets)).getsockname()[1]
        url = f"ws://127.0.0.1:{port}/session"
        first = await ws_client(runtime, url)
        ws = await connect(url, subprotocols=[SUBPROTOCOL])
        await ws.send(json.dumps({"type": "hello", "seq": 1, "payload": {}}))
        reply = json.loads(await ws.recv())
        assert reply["type"] == "error"
        assert reply["payload"]["code"] == "over_capacity"
        await ws.close()
        await first.bye()
        await first.close()
        server.close()
        await runtime.aclose()
        await server.wait_closed()

    async def test_unknown_path_rejected(self, ws_runtime):
        runtime, url = ws_runtime
        bad = url.replace("/session", "/nope")
        with pytest.raises(websockets.exceptions.InvalidStatus):
            await connect(bad, subprotocols=[SUBPROTOCOL])

    async def test_disconnect_frees_session_slot(self, ws_runtime):
        runtime, url = ws_runtime
        client = await ws_client(runtime, url)
        assert runtime.session_manager.limiter.active == 1
        await client.close()
        for _ in range(100):
            if runtime.session_manager.limiter.active == 0:
                break
            await asyncio.sleep(0.01)
        assert runtime.session_manager.limiter.active == 0
