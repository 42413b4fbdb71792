"""
Buffered sequential streams over files of fixed-size records.

Both directions keep one in-memory buffer of b bytes; the file is only touched
when the buffer is exhausted (read) or full (write). ReadStream.skip() moves
inside the buffer when it can and otherwise jumps the file offset once, so any
mix of reads and skips costs at most as many refills as a full scan.
"""

import os
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .counters import IoCounters
from ..utils.errors import FramingError, StreamCorruptionError

DEFAULT_BUFFER_SIZE = 65536


class ReadStream:
    """Sequential reader with a b-byte buffer and item-granular skip()."""

    def __init__(
        self,
        path: str | Path,
        dtype: np.dtype,
        buffer_size: int = DEFAULT_BUFFER_SIZE,
        counters: Optional[IoCounters] = None
    ):
        """
        Open a stream.

        Args:
            path: Stream file (raw concatenation of records)
            dtype: Record dtype
            buffer_size: Buffer capacity b in bytes (rounded down to whole records)
            counters: Optional shared instrumentation
        """
        self.path = Path(path)
        self.dtype = np.dtype(dtype)
        self.item_size = self.dtype.itemsize
        self.capacity = max(self.item_size, (buffer_size // self.item_size) * self.item_size)
        self.counters = counters

        self._file = open(self.path, "rb", buffering=0)
        self._size = os.fstat(self._file.fileno()).st_size
        if self._size % self.item_size:
            self._file.close()
            raise FramingError(
                f"{self.path} has {self._size} bytes, not a multiple of {self.item_size}"
            )

        self._buf = b""
        self._view = memoryview(self._buf)
        self._pos = 0
        self._offset = 0

        self.refills = 0
        self.bytes_read = 0
        self.seeks = 0

    # ---- properties ----

    @property
    def size_bytes(self) -> int:
        return self._size

    @property
    def num_items(self) -> int:
        return self._size // self.item_size

    @property
    def position(self) -> int:
        """Index of the next item to be delivered."""
        return (self._offset - len(self._buf) + self._pos) // self.item_size

    def at_end(self) -> bool:
        return self._pos >= len(self._buf) and self._offset >= self._size

    # ---- reading ----

    def _refill(self) -> bool:
        if self._offset >= self._size:
            self._buf = b""
            self._view = memoryview(self._buf)
            self._pos = 0
            return False

        if self._file.tell() != self._offset:
            self._file.seek(self._offset)
            self.seeks += 1
            if self.counters is not None:
                self.counters.add(seeks=1)

        wanted = min(self.capacity, self._size - self._offset)
        chunks = []
        remaining = wanted
        while remaining:
            data = self._file.read(remaining)
            if not data:
                break
            chunks.append(data)
            remaining -= len(data)
        data = b"".join(chunks)

        self._buf = data
        self._view = memoryview(data)
        self._pos = 0
        self._offset += len(data)
        self.refills += 1
        self.bytes_read += len(data)
        if self.counters is not None:
            self.counters.add(refills=1, bytes_read=len(data))
        return bool(data)

    def read_items(self, count: int) -> np.ndarray:
        """
        Read exactly `count` records.

        Args:
            count: Number of records (0 returns an empty array)

        Returns:
            Structured array of `count` records
        """
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        if count == 0:
            return np.empty(0, dtype=self.dtype)

        need = count * self.item_size
        end = self._pos + need
        if end <= len(self._buf):
            chunk = self._view[self._pos:end]
            self._pos = end
            return np.frombuffer(chunk, dtype=self.dtype)

        parts = []
        got = 0
        while need:
            if self._pos >= len(self._buf) and not self._refill():
                raise StreamCorruptionError(
                    f"{self.path}: wanted {count} items, stream ended after "
                    f"{got // self.item_size}"
                )
            take = min(need, len(self._buf) - self._pos)
            parts.append(self._view[self._pos:self._pos + take])
            self._pos += take
            need -= take
            got += take
        return np.frombuffer(b"".join(parts), dtype=self.dtype)

    def skip(self, num_items: int) -> None:
        """
        Advance past `num_items` records.

        No file access when the target stays inside the buffer; otherwise the
        file offset jumps and the next read refills from there.
        """
        if num_items < 0:
            raise ValueError(f"num_items must be >= 0, got {num_items}")
        if num_items == 0:
            return

        target = self._pos + num_items * self.item_size
        if target <= len(self._buf):
            self._pos = target
            return

        overshoot = target - len(self._buf)
        self._offset = min(self._offset + overshoot, self._size)
        self._buf = b""
        self._view = memoryview(self._buf)
        self._pos = 0

    def iter_chunks(self) -> Iterator[np.ndarray]:
        """Yield the rest of the stream one buffer at a time."""
        while True:
            if self._pos >= len(self._buf) and not self._refill():
                return
            chunk = self._view[self._pos:]
            self._pos = len(self._buf)
            yield np.frombuffer(chunk, dtype=self.dtype)

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> "ReadStream":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class WriteStream:
    """Append-only writer that flushes only when its buffer fills or on close."""

    def __init__(
        self,
        path: str | Path,
        buffer_size: int = DEFAULT_BUFFER_SIZE,
        counters: Optional[IoCounters] = None,
        append: bool = False
    ):
        """
        Open a stream for writing.

        Args:
            path: Target file
            buffer_size: Buffer capacity b in bytes
            counters: Optional shared instrumentation
            append: Keep existing content instead of truncating
        """
        self.path = Path(path)
        self.capacity = buffer_size
        self.counters = counters

        self._file = open(self.path, "ab" if append else "wb", buffering=0)
        self._buf = bytearray()
        self.bytes_written = 0
        self.flushes = 0
        self.closed = False
        if counters is not None:
            counters.add(files_created=1)

    def write(self, data) -> None:
        """Append raw bytes (any bytes-like object)."""
        view = memoryview(data).cast("B")
        self.bytes_written += len(view)
        while len(view):
            space = self.capacity - len(self._buf)
            self._buf += view[:space]
            view = view[space:]
            if len(self._buf) >= self.capacity:
                self._flush()

    def write_items(self, records: np.ndarray) -> None:
        """Append an array of records."""
        self.write(np.ascontiguousarray(records).tobytes())

    def _flush(self) -> None:
        if not self._buf:
            return
        view = memoryview(self._buf)
        while len(view):
            written = self._file.write(view)
            view = view[written:]
        if self.counters is not None:
            self.counters.add(flushes=1, bytes_written=len(self._buf))
        self.flushes += 1
        self._buf = bytearray()

    def close(self) -> None:
        if self.closed:
            return
        self._flush()
        self._file.close()
        self.closed = True

    def __enter__(self) -> "WriteStream":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_records(
    path: str | Path,
    records: np.ndarray,
    buffer_size: int = DEFAULT_BUFFER_SIZE,
    counters: Optional[IoCounters] = None
) -> int:
    """Write a record array to a new stream file; returns bytes written."""
    with WriteStream(path, buffer_size, counters) as stream:
        stream.write_items(records)
        return stream.bytes_written


def read_all(
    path: str | Path,
    dtype: np.dtype,
    buffer_size: int = DEFAULT_BUFFER_SIZE,
    counters: Optional[IoCounters] = None
) -> np.ndarray:
    """Read a whole stream file into one array."""
    with ReadStream(path, dtype, buffer_size, counters) as stream:
        chunks = list(stream.iter_chunks())
    if not chunks:
        return np.empty(0, dtype=np.dtype(dtype))
    return np.concatenate(chunks)
