"""
In-process network for protocol testing.

Each channel is a bounded queue drained by its own delivery thread, which
sleeps a seeded random delay before delivering each batch. Channels stay
FIFO while different channels interleave unpredictably.
"""

import queue
import random
import threading
import time
from typing import Optional

from .batch import Batch
from .transport import POLL_INTERVAL, Transport
from ..utils.logger import get_logger

logger = get_logger()

_CLOSE = object()


class SimulatedTransport(Transport):
    """One worker's endpoint on a SimulatedNetwork."""

    def __init__(self, rank: int, network: "SimulatedNetwork"):
        super().__init__(rank, network.num_workers)
        self.network = network
        # every endpoint observes the network-wide abort
        self._abort = network.abort_event
        self._closed = False

    def _send_frame(self, to: int, batch: Batch) -> None:
        frame = batch.encode()
        channel = self.network.channel(self.rank, to)
        while True:
            self._check_abort()
            try:
                channel.put(frame, timeout=POLL_INTERVAL)
                return
            except queue.Full:
                continue

    def abort(self, reason: str = "aborted") -> None:
        self.network.abort(f"worker {self.rank}: {reason}")

    def close(self) -> None:
        """Close every outgoing channel after the batches already queued."""
        if self._closed:
            return
        self._closed = True
        for to in range(self.num_workers):
            channel = self.network.channel(self.rank, to)
            while not self.network.abort_event.is_set():
                try:
                    channel.put(_CLOSE, timeout=POLL_INTERVAL)
                    break
                except queue.Full:
                    continue


class SimulatedNetwork:
    """
    n endpoints fully connected by FIFO channels with random delivery delays.

    Args:
        num_workers: |W|
        max_in_flight: Bound on queued batches per channel (backpressure)
        max_delay: Upper bound of the uniform per-batch delay in seconds
        seed: Seed for the per-channel delay generators
    """

    def __init__(
        self,
        num_workers: int,
        max_in_flight: int = 4,
        max_delay: float = 0.0,
        seed: int = 0
    ):
        self.num_workers = num_workers
        self.max_in_flight = max_in_flight
        self.max_delay = max_delay
        self.seed = seed

        self.abort_event = threading.Event()
        self._abort_reason = ""
        self._channels = {
            (s, r): queue.Queue(maxsize=max_in_flight)
            for s in range(num_workers)
            for r in range(num_workers)
        }
        self.transports = [SimulatedTransport(rank, self) for rank in range(num_workers)]
        self._threads: list[threading.Thread] = []
        self._started = False

    def channel(self, sender: int, receiver: int) -> queue.Queue:
        return self._channels[(sender, receiver)]

    def transport(self, rank: int) -> SimulatedTransport:
        return self.transports[rank]

    def start(self) -> None:
        """Start one delivery thread per channel."""
        if self._started:
            return
        self._started = True
        for (sender, receiver) in self._channels:
            thread = threading.Thread(
                target=self._pump,
                args=(sender, receiver),
                name=f"sim-{sender}->{receiver}",
                daemon=True,
            )
            thread.start()
            self._threads.append(thread)
        logger.debug(
            f"Simulated network up: {self.num_workers} workers, "
            f"max_delay={self.max_delay}s, seed={self.seed}"
        )

    def _pump(self, sender: int, receiver: int) -> None:
        rng = random.Random(self.seed * 1_000_003 + sender * self.num_workers + receiver)
        channel = self._channels[(sender, receiver)]
        endpoint = self.transports[receiver]
        while not self.abort_event.is_set():
            try:
                item = channel.get(timeout=POLL_INTERVAL)
            except queue.Empty:
                continue
            if item is _CLOSE:
                endpoint._channel_closed(sender)
                return
            if self.max_delay > 0:
                time.sleep(rng.uniform(0.0, self.max_delay))
            endpoint._deliver(sender, Batch.decode(item))

    def abort(self, reason: str = "aborted") -> None:
        if not self.abort_event.is_set():
            self._abort_reason = reason
            for endpoint in self.transports:
                endpoint._abort_reason = reason
            self.abort_event.set()
            logger.warning(f"Simulated network aborted: {reason}")

    def join(self, timeout: Optional[float] = 5.0) -> None:
        """Wait for delivery threads to finish (after every endpoint closed)."""
        for thread in self._threads:
            thread.join(timeout=timeout)

    def shutdown(self) -> None:
        """Stop all delivery threads."""
        self.abort_event.set()
        self.join()
