"""Application runtime: shared backends, bus, and connection hosting.

Used by the WebSocket server, the bench harness, replay, and the tests'
loopback clients. One runtime hosts many sessions.
"""

from __future__ import annotations

import asyncio
import json
import logging

from .backends import ScenarioCorpus
from .config import AppConfig
from .errors import MalformedFrame, OverCapacity
from .events import EventBus
from .protocol import encode_error, encode_hello_ack
from .session import Session, SessionManager, SharedBackends
from .transport import Connection, LoopbackConnection

logger = logging.getLogger(__name__)


class AppRuntime:
    def __init__(self, config: AppConfig, corpus: ScenarioCorpus | None = None) -> None:
        self.config = config
        self.bus = EventBus()
        self.backends = SharedBackends(config, corpus)
        self.session_manager = SessionManager(self.bus, config, self.backends)

    @property
    def corpus(self) -> ScenarioCorpus:
        return self.backends.corpus

    async def run_connection(self, conn: Connection) -> Session | None:
        """Full connection lifecycle: hello handshake, session, input loop.

        Returns the session (already closed) or None when the handshake
        failed or the limiter rejected the connection.
        """
        session = await self.accept(conn)
        if session is None:
            return None
        await session.input_gateway.run()
        return session

    async def accept(self, conn: Connection) -> Session | None:
        """Handshake + admission; sends hello_ack or an error frame."""
        frame = await conn.recv()
        if frame is None:
            await conn.close()
            return None
        try:
            hello = _parse_hello(frame)
        except MalformedFrame as exc:
            await conn.send(encode_error("bad_hello", str(exc)))
            await conn.close()
            return None
        try:
            session = await self.session_manager.open_session(conn)
        except OverCapacity:
            await conn.send(encode_error("over_capacity", "session limit reached"))
            await conn.close()
            return None
        logger.debug("hello from client: %s", hello.get("payload", {}))
        await conn.send(encode_hello_ack(session.session_id))
        return session

    async def connect_loopback(self) -> tuple[Connection, asyncio.Task]:
        """Open an in-process connection; returns the client side and the
        task running the server side."""
        client_side, server_side = LoopbackConnection.pair()
        task = asyncio.create_task(self.run_connection(server_side), name="loopback-conn")
        return client_side, task

    async def aclose(self) -> None:
        await self.session_manager.close_all()


def _parse_hello(frame: str | bytes) -> dict:
    if isinstance(frame, (bytes, bytearray)):
        raise MalformedFrame("handshake must be a text frame")
    try:
        obj = json.loads(frame)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("type") != "hello":
        raise MalformedFrame("first frame must be a hello envelope")
    return obj
