"""
Splittable streams: one logical append-only stream stored as a chain of
bounded-size files, so a consumer can fetch the head while a producer is
still appending to the tail.
"""

import shutil
import threading
from pathlib import Path
from typing import Optional

from .buffered import DEFAULT_BUFFER_SIZE, WriteStream
from .counters import IoCounters
from ..utils.logger import get_logger

logger = get_logger()

PART_PATTERN = "part-{:06d}"


def part_path(directory: Path, index: int) -> Path:
    """Path of the index-th file (1-based) of a splittable stream."""
    return directory / PART_PATTERN.format(index)


def list_parts(directory: str | Path) -> list[Path]:
    """Part files present in a stream directory, in sequence order."""
    directory = Path(directory)
    if not directory.exists():
        return []
    return sorted(directory.glob("part-*"))


class SplittableStream:
    """
    Chain of files F_1, F_2, ... each holding at most `split_size` bytes
    (or exactly one oversized item).

    One appender thread and one fetcher thread may use the stream
    concurrently. `no_w` counts fully-written files and `no_s` counts fetched
    files; both change under `condition`, which is notified whenever a file
    becomes fetchable or the stream is finalized.
    """

    def __init__(
        self,
        directory: str | Path,
        split_size: int,
        buffer_size: int = DEFAULT_BUFFER_SIZE,
        condition: Optional[threading.Condition] = None,
        counters: Optional[IoCounters] = None
    ):
        """
        Create an empty stream.

        Args:
            directory: Per-stream directory (created if missing)
            split_size: Split size B in bytes
            buffer_size: Write buffer size b of the tail file
            condition: Condition shared with the fetcher (one per OMS ring)
            counters: Optional shared instrumentation
        """
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.split_size = split_size
        self.buffer_size = buffer_size
        self.condition = condition or threading.Condition()
        self.counters = counters

        self.no_w = 0
        self.no_s = 0
        self.finalized = False

        self._tail: Optional[WriteStream] = None
        self._tail_bytes = 0
        self.items_appended = 0
        self.bytes_appended = 0

    # ---- producer side ----

    def append(self, item: bytes) -> None:
        """Append one serialized item."""
        size = len(item)
        if self._tail is not None and self._tail_bytes and self._tail_bytes + size > self.split_size:
            self._close_tail()
        if self._tail is None:
            self._open_tail()
        self._tail.write(item)
        self._tail_bytes += size
        self.items_appended += 1
        self.bytes_appended += size
        if self._tail_bytes >= self.split_size:
            self._close_tail()

    def append_many(self, data: bytes, item_size: int) -> None:
        """
        Append a run of same-size items, splitting at item boundaries.

        Args:
            data: Concatenated items
            item_size: Size of one item in bytes
        """
        view = memoryview(data).cast("B")
        if len(view) % item_size:
            raise ValueError(f"{len(view)} bytes is not a multiple of item size {item_size}")
        while len(view):
            if self._tail is None:
                self._open_tail()
            room = (self.split_size - self._tail_bytes) // item_size
            if room <= 0:
                if self._tail_bytes:
                    self._close_tail()
                    continue
                room = 1
            take = min(room * item_size, len(view))
            self._tail.write(view[:take])
            self._tail_bytes += take
            self.items_appended += take // item_size
            self.bytes_appended += take
            view = view[take:]
            if self._tail_bytes + item_size > self.split_size:
                self._close_tail()

    def finalize(self) -> None:
        """Close the tail so every appended item becomes fetchable."""
        if self._tail is not None:
            self._close_tail()
        with self.condition:
            self.finalized = True
            self.condition.notify_all()

    def _open_tail(self) -> None:
        path = part_path(self.directory, self.no_w + 1)
        self._tail = WriteStream(path, self.buffer_size, self.counters)
        self._tail_bytes = 0

    def _close_tail(self) -> None:
        self._tail.close()
        self._tail = None
        self._tail_bytes = 0
        with self.condition:
            self.no_w += 1
            self.condition.notify_all()

    # ---- consumer side ----

    def has_ready(self) -> bool:
        with self.condition:
            return self.no_s < self.no_w

    @property
    def exhausted(self) -> bool:
        """Finalized and every file fetched."""
        with self.condition:
            return self.finalized and self.no_s == self.no_w

    def fetch_next(self) -> Optional[Path]:
        """Take F_{no_s+1} if it is fully written; None otherwise."""
        with self.condition:
            if self.no_s >= self.no_w:
                return None
            self.no_s += 1
            return part_path(self.directory, self.no_s)

    def fetch_all_ready(self) -> list[Path]:
        """Take every fully-written, not yet fetched file."""
        with self.condition:
            paths = [part_path(self.directory, j) for j in range(self.no_s + 1, self.no_w + 1)]
            self.no_s = self.no_w
            return paths

    def remove(self) -> None:
        """Delete the stream directory and whatever files remain."""
        if self._tail is not None:
            self._tail.close()
            self._tail = None
        shutil.rmtree(self.directory, ignore_errors=True)

    def __repr__(self) -> str:
        return (
            f"SplittableStream({self.directory.name}, no_s={self.no_s}, "
            f"no_w={self.no_w}, finalized={self.finalized})"
        )
