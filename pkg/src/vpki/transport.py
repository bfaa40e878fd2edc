"""Framed request/response transport over TCP (optionally TLS) or in-process.

Each frame is a u32 big-endian length followed by one encoded message.  A
connection carries any number of request/response pairs; the client closes it
when done.  Authorities answer rejected requests with an ``ErrorResponse``,
which the client side turns back into :class:`~vpki.errors.RemoteError`.
"""

from __future__ import annotations

import asyncio
import logging
import ssl
import struct
import threading
from contextlib import asynccontextmanager
from typing import AsyncIterator, Optional, Protocol

from .codec import decode, encode
from .errors import CodecError, RemoteError, TransportError, VpkiError
from .model import ErrorResponse

log = logging.getLogger(__name__)

FRAME_HEADER = struct.Struct(">I")
MAX_FRAME = 16 << 20


class Service(Protocol):
    def handle(self, msg, now: int): ...


class Clock(Protocol):
    def now(self) -> int: ...


async def read_frame(reader: asyncio.StreamReader) -> Optional[bytes]:
    """Next frame body, or ``None`` on a clean end of stream."""
    try:
        header = await reader.readexactly(FRAME_HEADER.size)
    except asyncio.IncompleteReadError as exc:
        if exc.partial:
            raise
        return None
    (size,) = FRAME_HEADER.unpack(header)
    if size > MAX_FRAME:
        raise CodecError(f"frame of {size} bytes exceeds limit")
    return await reader.readexactly(size)


def write_frame(writer: asyncio.StreamWriter, body: bytes) -> None:
    writer.write(FRAME_HEADER.pack(len(body)) + body)


def dispatch(service: Service, data: bytes, now: int) -> bytes:
    """Decode one request, run it through ``service`` and encode the answer."""
    try:
        msg = decode(data)
        resp = service.handle(msg, now)
    except VpkiError as exc:
        resp = ErrorResponse(exc.code, str(exc))
    except Exception as exc:  # never let one request take the server down
        log.exception("unhandled error while serving %s", type(exc).__name__)
        resp = ErrorResponse("InternalError", type(exc).__name__)
    return encode(resp)


def _unwrap(data: bytes):
    msg = decode(data)
    if isinstance(msg, ErrorResponse):
        raise RemoteError(msg.code, msg.detail)
    return msg


# -- server side -------------------------------------------------------------------

async def start_server(service: Service, clock: Clock, host: str = "127.0.0.1", port: int = 0,
                       ssl_context: ssl.SSLContext | None = None) -> asyncio.AbstractServer:
    async def on_client(reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            while True:
                data = await read_frame(reader)
                if data is None:
                    break
                write_frame(writer, dispatch(service, data, clock.now()))
                await writer.drain()
        except (asyncio.IncompleteReadError, ConnectionError, ssl.SSLError, CodecError) as exc:
            log.debug("connection dropped: %r", exc)
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, ssl.SSLError):
                pass

    return await asyncio.start_server(on_client, host, port, ssl=ssl_context, backlog=4096)


def bound_port(server: asyncio.AbstractServer) -> int:
    return server.sockets[0].getsockname()[1]


class ServerThread:
    """Run one service on a private event loop in a daemon thread."""

    def __init__(self, service: Service, clock: Clock, host: str = "127.0.0.1", port: int = 0,
                 ssl_context: ssl.SSLContext | None = None):
        self.service = service
        self.clock = clock
        self.host = host
        self.port = port
        self.ssl_context = ssl_context
        self._loop = asyncio.new_event_loop()
        self._server: asyncio.AbstractServer | None = None
        self._thread = threading.Thread(target=self._run, daemon=True, name=f"vpki-{type(service).__name__}")
        self._ready = threading.Event()

    def _run(self) -> None:
        asyncio.set_event_loop(self._loop)
        self._server = self._loop.run_until_complete(
            start_server(self.service, self.clock, self.host, self.port, self.ssl_context))
        self.port = bound_port(self._server)
        self._ready.set()
        self._loop.run_forever()

    def start(self) -> "ServerThread":
        self._thread.start()
        if not self._ready.wait(10):
            raise RuntimeError("server thread failed to start")
        return self

    def stop(self) -> None:
        async def shutdown():
            self._server.close()
            await self._server.wait_closed()

        if self._server is not None and self._loop.is_running():
            asyncio.run_coroutine_threadsafe(shutdown(), self._loop).result(10)
            self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(10)

    def __enter__(self) -> "ServerThread":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


# -- client side -------------------------------------------------------------------

class Connection(Protocol):
    async def call(self, msg): ...


class _StreamConnection:
    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer

    async def call(self, msg):
        try:
            write_frame(self.writer, encode(msg))
            await self.writer.drain()
            data = await read_frame(self.reader)
        except (OSError, ssl.SSLError, asyncio.IncompleteReadError) as exc:
            raise _transport_error(exc) from exc
        if data is None:
            raise TransportError("connection closed before response")
        return _unwrap(data)


def _transport_error(exc: BaseException) -> TransportError:
    err = TransportError(f"{type(exc).__name__}: {exc}")
    err.code = f"transport:{type(exc).__name__}"
    return err


class TcpTransport:
    def __init__(self, host: str, port: int, ssl_context: ssl.SSLContext | None = None,
                 server_hostname: str | None = None, timeout: float = 60.0):
        self.host = host
        self.port = port
        self.ssl_context = ssl_context
        self.server_hostname = server_hostname
        self.timeout = timeout

    @classmethod
    def from_address(cls, address: str, ssl_context: ssl.SSLContext | None = None, **kw) -> "TcpTransport":
        host, _, port = address.rpartition(":")
        return cls(host or "127.0.0.1", int(port), ssl_context, **kw)

    @asynccontextmanager
    async def connect(self) -> AsyncIterator[_StreamConnection]:
        kw = {}
        if self.ssl_context is not None:
            kw = {"ssl": self.ssl_context, "server_hostname": self.server_hostname or self.host}
        try:
            reader, writer = await asyncio.wait_for(
                asyncio.open_connection(self.host, self.port, **kw), self.timeout)
        except (OSError, ssl.SSLError, asyncio.TimeoutError) as exc:
            raise _transport_error(exc) from exc
        try:
            yield _StreamConnection(reader, writer)
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except (OSError, ssl.SSLError):
                pass


class _LocalConnection:
    def __init__(self, service: Service, clock: Clock):
        self.service = service
        self.clock = clock

    async def call(self, msg):
        return _unwrap(dispatch(self.service, encode(msg), self.clock.now()))


class LocalTransport:
    """In-process transport; messages still make a full codec round trip."""

    def __init__(self, service: Service, clock: Clock):
        self.service = service
        self.clock = clock

    @asynccontextmanager
    async def connect(self) -> AsyncIterator[_LocalConnection]:
        yield _LocalConnection(self.service, self.clock)


async def call_once(transport, msg):
    async with transport.connect() as conn:
        return await conn.call(msg)
