"""
Outgoing message streams (OMSs) of one superstep, arranged as a ring.
"""

import threading
from pathlib import Path
from typing import Optional

from ..streams.counters import IoCounters
from ..streams.splittable import SplittableStream


class OmsRing:
    """
    One SplittableStream per destination worker, sharing one condition.

    The computing unit appends and finalizes; the sending unit scans the
    ring from position p for the next destination with a fully-written file.
    """

    def __init__(
        self,
        root: str | Path,
        step: int,
        rank: int,
        num_workers: int,
        split_size: int,
        buffer_size: int,
        counters: Optional[IoCounters] = None
    ):
        """
        Create the ring for one superstep.

        Args:
            root: Worker's `oms` directory
            step: Superstep (or exchange round) number
            rank: This worker's index (initial scan position)
            num_workers: |W|
            split_size: Split size B
            buffer_size: Stream buffer size b
            counters: Shared OMS instrumentation
        """
        self.step = step
        self.num_workers = num_workers
        self.condition = threading.Condition()
        self.position = rank
        self.streams = [
            SplittableStream(
                Path(root) / str(dest) / f"step-{step}",
                split_size,
                buffer_size,
                condition=self.condition,
                counters=counters,
            )
            for dest in range(num_workers)
        ]

    def append(self, dest: int, item: bytes) -> None:
        self.streams[dest].append(item)

    def finalize_all(self) -> None:
        for stream in self.streams:
            stream.finalize()

    def pick(self) -> Optional[int]:
        """
        Scan p+1, p+2, ..., p (ring order) for a destination with a file ready.

        The caller sets `position` to the returned index after sending.
        """
        with self.condition:
            for offset in range(1, self.num_workers + 1):
                dest = (self.position + offset) % self.num_workers
                if self.streams[dest].has_ready():
                    return dest
            return None

    def exhausted(self, dest: int) -> bool:
        return self.streams[dest].exhausted

    def wait(self, timeout: float) -> None:
        """Sleep until a file is written or a stream finalized (or timeout)."""
        with self.condition:
            self.condition.wait(timeout)

    @property
    def messages_appended(self) -> int:
        return sum(stream.items_appended for stream in self.streams)

    @property
    def bytes_appended(self) -> int:
        return sum(stream.bytes_appended for stream in self.streams)

    def remove(self) -> None:
        for stream in self.streams:
            stream.remove()
