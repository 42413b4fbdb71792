"""
Transport interface shared by the simulated and socket implementations.

Every transport delivers incoming batches into three inboxes: data (DATA and
END_TAG, read by the receiving unit), control (allreduce rounds, read by the
computing unit) and barrier (read by the receiving unit). Worker 0 doubles as
the coordinator for control_allreduce and receiver_barrier.
"""

import queue
import threading
from abc import ABC, abstractmethod
from collections import Counter
from typing import Any, Callable, Optional

from .batch import Batch, BatchKind
from ..models.context import ControlRecord, merge_control_records
from ..utils.errors import ProtocolError, TransportClosed, TransportError
from ..utils.logger import get_logger, log_batch

COORDINATOR = 0

# Seconds between abort checks while blocked
POLL_INTERVAL = 0.05

_CHANNEL_CLOSED = object()


class Transport(ABC):
    """
    Point-to-point FIFO channels from this worker to every worker
    (itself included).

    send_batch is used by the sending unit, recv_batch and receiver_barrier
    by the receiving unit, control_allreduce by the computing unit; the three
    may run concurrently.
    """

    def __init__(self, rank: int, num_workers: int):
        """
        Initialize transport.

        Args:
            rank: This worker's index
            num_workers: |W|
        """
        if not 0 <= rank < num_workers:
            raise ValueError(f"rank {rank} outside [0, {num_workers})")
        self.rank = rank
        self.num_workers = num_workers
        self.logger = get_logger(rank)

        self._data: queue.Queue = queue.Queue()
        self._control: queue.Queue = queue.Queue()
        self._barrier: queue.Queue = queue.Queue()
        self._closed_channels: set[int] = set()
        self._abort = threading.Event()
        self._abort_reason = ""

        self.sent = Counter()
        self.received = Counter()
        self.bytes_sent = 0
        self.bytes_received = 0
        self._stats_lock = threading.Lock()

    # ---- implementation hooks ----

    @abstractmethod
    def _send_frame(self, to: int, batch: Batch) -> None:
        """Put one batch on the channel to worker `to` (may block)."""

    def start(self) -> None:
        """Connect channels. Default: nothing to do."""

    def close(self) -> None:
        """Close outgoing channels. Default: nothing to do."""

    @property
    def aborted(self) -> bool:
        return self._abort.is_set()

    def abort(self, reason: str = "aborted") -> None:
        """Fail every blocked or future operation on this transport."""
        if not self._abort.is_set():
            self._abort_reason = reason
            self._abort.set()
            self.logger.warning(f"Transport aborted: {reason}")

    def _check_abort(self) -> None:
        if self._abort.is_set():
            raise TransportError(f"Worker {self.rank}: network aborted ({self._abort_reason})")

    # ---- delivery side (called by implementations) ----

    def _deliver(self, sender: int, batch: Batch) -> None:
        """Route an incoming batch to its inbox."""
        with self._stats_lock:
            self.received[batch.kind.name] += 1
            self.bytes_received += len(batch.payload)
        if batch.kind in (BatchKind.DATA, BatchKind.END_TAG):
            self._data.put((sender, batch))
        elif batch.kind == BatchKind.CONTROL:
            self._control.put((sender, batch))
        else:
            self._barrier.put((sender, batch))

    def _channel_closed(self, sender: int) -> None:
        self._data.put((sender, _CHANNEL_CLOSED))

    def _wait(self, inbox: queue.Queue, timeout: Optional[float] = None) -> Any:
        waited = 0.0
        while True:
            self._check_abort()
            try:
                return inbox.get(timeout=POLL_INTERVAL)
            except queue.Empty:
                waited += POLL_INTERVAL
                if timeout is not None and waited >= timeout:
                    raise TimeoutError(f"No batch within {timeout}s") from None

    # ---- public operations ----

    def send_batch(self, to: int, batch: Batch) -> None:
        """
        Send one batch to worker `to`, preserving per-channel order.

        Args:
            to: Destination worker index
            batch: Batch to send
        """
        self._check_abort()
        if not 0 <= to < self.num_workers:
            raise TransportError(f"No worker {to} in a {self.num_workers}-worker job")
        self._send_frame(to, batch)
        with self._stats_lock:
            self.sent[batch.kind.name] += 1
            self.bytes_sent += len(batch.payload)
        if batch.kind != BatchKind.CONTROL:
            log_batch(self.rank, "send", to, batch.superstep, batch.kind.name, len(batch.payload))

    def recv_batch(self, timeout: Optional[float] = None) -> tuple[int, Batch]:
        """
        Next DATA or END_TAG batch from any channel.

        Args:
            timeout: Seconds to wait before raising TimeoutError (None blocks)

        Returns:
            (sender, batch)
        """
        while True:
            if len(self._closed_channels) == self.num_workers and self._data.empty():
                raise TransportClosed(f"Worker {self.rank}: all channels closed")
            sender, batch = self._wait(self._data, timeout)
            if batch is _CHANNEL_CLOSED:
                self._closed_channels.add(sender)
                continue
            return sender, batch

    def control_allreduce(
        self,
        superstep: int,
        record: ControlRecord,
        merge_aggregate: Optional[Callable[[Any, Any], Any]] = None
    ) -> ControlRecord:
        """
        Merge one control record per worker; every worker gets the same result.

        Args:
            superstep: Round tag (0 for loading)
            record: This worker's contribution
            merge_aggregate: Program aggregator merge

        Returns:
            Merged record
        """
        if self.num_workers == 1:
            return merge_control_records([record], merge_aggregate)

        if self.rank != COORDINATOR:
            self.send_batch(COORDINATOR, Batch.control(superstep, record.to_json()))
            sender, batch = self._wait(self._control)
            self._expect(batch, BatchKind.CONTROL, superstep, sender, COORDINATOR)
            return ControlRecord.from_json(batch.control_body())

        reports: dict[int, ControlRecord] = {COORDINATOR: record}
        while len(reports) < self.num_workers:
            sender, batch = self._wait(self._control)
            self._expect(batch, BatchKind.CONTROL, superstep, sender)
            if sender in reports:
                raise ProtocolError(f"Worker {sender} reported twice in round {superstep}")
            reports[sender] = ControlRecord.from_json(batch.control_body())

        merged = merge_control_records(
            [reports[r] for r in range(self.num_workers)], merge_aggregate
        )
        body = merged.to_json()
        for peer in range(1, self.num_workers):
            self.send_batch(peer, Batch.control(superstep, body))
        # coordinator returns the decoded form so every worker sees identical values
        return ControlRecord.from_json(Batch.control(superstep, body).control_body())

    def receiver_barrier(self, superstep: int) -> None:
        """Return once every worker's receiving unit has entered the barrier for `superstep`."""
        if self.num_workers == 1:
            return

        if self.rank != COORDINATOR:
            self.send_batch(COORDINATOR, Batch.barrier(superstep))
            sender, batch = self._wait(self._barrier)
            self._expect(batch, BatchKind.BARRIER, superstep, sender, COORDINATOR)
            return

        entered = {COORDINATOR}
        while len(entered) < self.num_workers:
            sender, batch = self._wait(self._barrier)
            self._expect(batch, BatchKind.BARRIER, superstep, sender)
            entered.add(sender)
        for peer in range(1, self.num_workers):
            self.send_batch(peer, Batch.barrier(superstep))

    def _expect(
        self,
        batch: Batch,
        kind: BatchKind,
        superstep: int,
        sender: int,
        required_sender: Optional[int] = None
    ) -> None:
        if batch.kind != kind or batch.superstep != superstep:
            raise ProtocolError(
                f"Worker {self.rank} expected {kind.name} for round {superstep}, "
                f"got {batch!r} from worker {sender}"
            )
        if required_sender is not None and sender != required_sender:
            raise ProtocolError(
                f"Worker {self.rank} got {kind.name} from worker {sender}, "
                f"expected worker {required_sender}"
            )

    def summary(self) -> dict:
        """Batch and byte counts for stats files."""
        with self._stats_lock:
            return {
                "sent": dict(self.sent),
                "received": dict(self.received),
                "bytes_sent": self.bytes_sent,
                "bytes_received": self.bytes_received,
            }
