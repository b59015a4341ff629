"""Connection abstractions.

The engine speaks to clients through a minimal frame interface so the
same session code runs over real WebSockets and over the in-process
loopback pair the tests and bench harness use.
"""

from __future__ import annotations

import asyncio
from typing import Protocol, runtime_checkable

_CLOSE = object()


@runtime_checkable
class Connection(Protocol):
    async def send(self, frame: str | bytes) -> None: ...

    async def recv(self) -> str | bytes | None:
        """Next frame, or None once the peer closed."""
        ...

    async def close(self) -> None: ...


class LoopbackConnection:
    """One side of an in-process frame pipe."""

    def __init__(self, outbound: asyncio.Queue, inbound: asyncio.Queue) -> None:
        self._outbound = outbound
        self._inbound = inbound
        self._closed = False

    @classmethod
    def pair(cls) -> tuple["LoopbackConnection", "LoopbackConnection"]:
        """(client_side, server_side) connected back to back."""
        a: asyncio.Queue = asyncio.Queue()
        b: asyncio.Queue = asyncio.Queue()
        return cls(a, b), cls(b, a)

    async def send(self, frame: str | bytes) -> None:
        if self._closed:
            raise ConnectionError("connection closed")
        await self._outbound.put(frame)

    async def recv(self) -> str | bytes | None:
        if self._closed:
            return None
        frame = await self._inbound.get()
        if frame is _CLOSE:
            self._closed = True
            return None
        return frame

    async def close(self) -> None:
        if not self._closed:
            self._closed = True
            await self._outbound.put(_CLOSE)
