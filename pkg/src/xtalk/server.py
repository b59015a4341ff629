"""WebSocket transport: hosts the engine at the `/session` endpoint."""

from __future__ import annotations

import asyncio
import http
import logging

from websockets.asyncio.server import Server, ServerConnection, serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .errors import BindError
from .protocol import SUBPROTOCOL
from .runtime import AppRuntime

logger = logging.getLogger(__name__)

ENDPOINT_PATH = "/session"


class WebSocketConnection:
    """Adapts a websockets ServerConnection to the engine Connection."""

    def __init__(self, ws: ServerConnection) -> None:
        self.ws = ws

    async def send(self, frame: str | bytes) -> None:
        try:
            await self.ws.send(frame)
        except ConnectionClosed as exc:
            raise ConnectionError("websocket closed") from exc

    async def recv(self) -> str | bytes | None:
        try:
            return await self.ws.recv()
        except ConnectionClosed:
            return None

    async def close(self) -> None:
        await self.ws.close()


def _check_path(connection: ServerConnection, request):
    if request.path.split("?")[0] != ENDPOINT_PATH:
        return connection.respond(http.HTTPStatus.NOT_FOUND, "unknown endpoint\n")
    return None


async def start_server(runtime: AppRuntime) -> Server:
    host, _, port_text = runtime.config.listen.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        raise BindError(f"invalid listen address {runtime.config.listen!r}") from None

    async def handler(ws: ServerConnection) -> None:
        conn = WebSocketConnection(ws)
        try:
            await runtime.run_connection(conn)
        except Exception:
            logger.exception("connection handler failed")

    try:
        return await ws_serve(
            handler,
            host or "127.0.0.1",
            port,
            subprotocols=[SUBPROTOCOL],
            process_request=_check_path,
            max_size=2**22,
        )
    except OSError as exc:
        raise BindError(f"cannot bind {runtime.config.listen}: {exc}") from exc


async def serve_forever(runtime: AppRuntime) -> None:
    """Run until cancelled (SIGINT); closes every session on the way out."""
    server = await start_server(runtime)
    logger.info("listening on ws://%s%s", runtime.config.listen, ENDPOINT_PATH)
    try:
        await asyncio.get_running_loop().create_future()
    except asyncio.CancelledError:
        pass
    finally:
        server.close()
        await runtime.aclose()
        await server.wait_closed()
