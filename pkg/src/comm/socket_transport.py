"""
Socket transport between local worker processes.

Each worker runs a websockets server on its own asyncio loop in a background
thread and opens one client connection to every worker (itself included).
A connection is one FIFO channel: the first message names the sender, every
following binary message is one batch frame.
"""

import asyncio
import concurrent.futures
import json
import threading
import time
from typing import Optional

import websockets
from websockets.exceptions import ConnectionClosed, ConnectionClosedOK

from .batch import Batch
from .transport import POLL_INTERVAL, Transport
from ..utils.errors import FramingError, TransportError


class SocketTransport(Transport):
    """Transport over websocket connections, one per ordered worker pair."""

    def __init__(
        self,
        rank: int,
        addresses: list[tuple[str, int]],
        max_in_flight: int = 4,
        connect_timeout: float = 30.0
    ):
        """
        Initialize socket transport.

        Args:
            rank: This worker's index
            addresses: (host, port) of every worker, indexed by rank
            max_in_flight: Incoming frames buffered per connection
            connect_timeout: Seconds to keep retrying peer connections
        """
        super().__init__(rank, len(addresses))
        self.addresses = addresses
        self.max_in_flight = max_in_flight
        self.connect_timeout = connect_timeout

        self.loop: Optional[asyncio.AbstractEventLoop] = None
        self.thread: Optional[threading.Thread] = None
        self._server = None
        self._peers: dict[int, object] = {}
        self._locks: dict[int, asyncio.Lock] = {}
        self._ready = threading.Event()
        self._startup_error: Optional[BaseException] = None
        self._closing = False

    # ---- lifecycle ----

    def start(self) -> None:
        """Start the server thread and connect to every worker."""
        if self.thread is not None:
            self.logger.warning("Socket transport already running")
            return

        self.thread = threading.Thread(target=self._run_loop, name=f"net-{self.rank}", daemon=True)
        self.thread.start()
        if not self._ready.wait(timeout=self.connect_timeout):
            raise TransportError(f"Worker {self.rank}: server did not start")
        if self._startup_error is not None:
            raise TransportError(
                f"Worker {self.rank}: cannot listen on {self.addresses[self.rank]}: "
                f"{self._startup_error}"
            )

        future = asyncio.run_coroutine_threadsafe(self._connect_all(), self.loop)
        try:
            future.result(timeout=self.connect_timeout + 5)
        except Exception as e:
            raise TransportError(f"Worker {self.rank}: cannot reach peers: {e}") from e
        self.logger.info(f"🔌 Connected to {self.num_workers} workers")

    def _run_loop(self) -> None:
        self.loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self.loop)
        try:
            self.loop.run_until_complete(self._start_server())
        except Exception as e:
            self._startup_error = e
            self._ready.set()
            self.loop.close()
            return
        self._ready.set()
        try:
            self.loop.run_forever()
        finally:
            self.loop.close()

    async def _start_server(self) -> None:
        host, port = self.addresses[self.rank]
        self._server = await websockets.serve(
            self._handle, host, port, max_size=None, max_queue=self.max_in_flight
        )

    async def _connect_all(self) -> None:
        for peer in range(self.num_workers):
            websocket = await self._connect(peer)
            await websocket.send(json.dumps({"rank": self.rank}))
            self._peers[peer] = websocket
            self._locks[peer] = asyncio.Lock()

    async def _connect(self, peer: int):
        host, port = self.addresses[peer]
        uri = f"ws://{host}:{port}"
        deadline = time.monotonic() + self.connect_timeout
        while True:
            try:
                return await websockets.connect(uri, max_size=None)
            except (OSError, asyncio.TimeoutError) as e:
                if time.monotonic() > deadline:
                    raise TransportError(f"Worker {peer} at {uri} unreachable: {e}") from e
                await asyncio.sleep(0.1)

    async def _handle(self, websocket) -> None:
        sender = -1
        try:
            hello = json.loads(await websocket.recv())
            sender = int(hello["rank"])
            async for message in websocket:
                self._deliver(sender, Batch.decode(message))
            self._channel_closed(sender)
        except ConnectionClosedOK:
            if sender >= 0:
                self._channel_closed(sender)
        except ConnectionClosed:
            if not self._closing:
                self.abort(f"connection from worker {sender} lost")
        except (FramingError, ValueError, KeyError) as e:
            self.abort(f"bad frame from worker {sender}: {e}")

    # ---- sending ----

    def _send_frame(self, to: int, batch: Batch) -> None:
        if self.loop is None or to not in self._peers:
            raise TransportError(f"Worker {self.rank}: transport not connected")
        future = asyncio.run_coroutine_threadsafe(self._send(to, batch.encode()), self.loop)
        while True:
            try:
                future.result(timeout=POLL_INTERVAL)
                return
            except concurrent.futures.TimeoutError:
                if self.aborted:
                    future.cancel()
                    self._check_abort()
            except ConnectionClosed as e:
                self.abort(f"connection to worker {to} lost")
                raise TransportError(f"Worker {self.rank}: peer {to} unreachable") from e

    async def _send(self, to: int, frame: bytes) -> None:
        async with self._locks[to]:
            await self._peers[to].send(frame)

    # ---- shutdown ----

    def close(self) -> None:
        """Close outgoing connections and stop the server."""
        if self.loop is None or self._closing:
            return
        self._closing = True
        future = asyncio.run_coroutine_threadsafe(self._shutdown(), self.loop)
        try:
            future.result(timeout=10)
        except Exception as e:
            self.logger.warning(f"Socket shutdown incomplete: {e}")
        self.loop.call_soon_threadsafe(self.loop.stop)
        if self.thread is not None:
            self.thread.join(timeout=5)
        self.logger.debug("Socket transport stopped")

    async def _shutdown(self) -> None:
        for websocket in self._peers.values():
            await websocket.close()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    def abort(self, reason: str = "aborted") -> None:
        super().abort(reason)
        if self.loop is not None and not self._closing and self.loop.is_running():
            self._closing = True
            asyncio.run_coroutine_threadsafe(self._shutdown(), self.loop)
