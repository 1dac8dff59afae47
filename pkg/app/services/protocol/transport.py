"""Ordered, reliable duplex frame delivery: in-process queues or TCP streams."""

from __future__ import annotations

import asyncio
import logging
from typing import Protocol

from app.exceptions import FrameDecodeError, TransportError
from app.services.protocol.wire import HEADER, HEADER_SIZE, max_payload_size

logger = logging.getLogger(__name__)


class Transport(Protocol):
    async def send(self, frame: bytes) -> None: ...

    async def recv(self) -> tuple[int, bytes]:
        """Next whole frame and the stream offset it started at."""
        ...

    async def close(self) -> None: ...


class InProcessTransport:
    def __init__(self, inbox: asyncio.Queue, outbox: asyncio.Queue):
        self._inbox = inbox
        self._outbox = outbox
        self._received = 0
        self._closed = False

    @classmethod
    def pair(cls) -> tuple["InProcessTransport", "InProcessTransport"]:
        a_to_b: asyncio.Queue = asyncio.Queue()
        b_to_a: asyncio.Queue = asyncio.Queue()
        return cls(b_to_a, a_to_b), cls(a_to_b, b_to_a)

    async def send(self, frame: bytes) -> None:
        if self._closed:
            raise TransportError("send on a closed transport")
        await self._outbox.put(bytes(frame))

    async def recv(self) -> tuple[int, bytes]:
        frame = await self._inbox.get()
        if frame is None:
            raise TransportError("connection closed by peer")
        offset = self._received
        self._received += len(frame)
        return offset, frame

    async def close(self) -> None:
        if not self._closed:
            self._closed = True
            await self._outbox.put(None)


class StreamTransport:
    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self._reader = reader
        self._writer = writer
        self._received = 0

    @classmethod
    async def connect(cls, host: str, port: int) -> "StreamTransport":
        try:
            reader, writer = await asyncio.open_connection(host, port)
        except OSError as exc:
            raise TransportError(f"cannot reach {host}:{port}: {exc}") from exc
        return cls(reader, writer)

    async def send(self, frame: bytes) -> None:
        try:
            self._writer.write(frame)
            await self._writer.drain()
        except (ConnectionError, OSError) as exc:
            raise TransportError(f"send failed: {exc}") from exc

    async def recv(self) -> tuple[int, bytes]:
        offset = self._received
        try:
            header = await self._reader.readexactly(HEADER_SIZE)
        except asyncio.IncompleteReadError as exc:
            if not exc.partial:
                raise TransportError("connection closed by peer") from None
            raise FrameDecodeError("truncated frame header", offset) from None
        except ConnectionError as exc:
            raise TransportError(f"receive failed: {exc}") from exc

        length, _ = HEADER.unpack(header)
        if length > max_payload_size():
            raise FrameDecodeError(f"declared payload of {length} bytes exceeds the frame limit", offset)
        try:
            payload = await self._reader.readexactly(length)
        except asyncio.IncompleteReadError as exc:
            raise FrameDecodeError(
                f"truncated frame: {len(exc.partial)} of {length} payload bytes", offset
            ) from None
        self._received += HEADER_SIZE + length
        return offset, header + payload

    async def close(self) -> None:
        self._writer.close()
        try:
            await self._writer.wait_closed()
        except (ConnectionError, OSError):
            logger.debug("peer already gone on close")
