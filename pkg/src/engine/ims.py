"""
Incoming message stream (IMS): built by the receiving unit from sorted
per-batch runs, consumed by the computing unit through a lookahead cursor.
"""

import shutil
from pathlib import Path
from typing import Any, Iterator, Optional

import numpy as np

from ..models.records import decode_records
from ..streams.buffered import DEFAULT_BUFFER_SIZE, ReadStream, write_records
from ..streams.counters import IoCounters
from ..streams.merge import Combiner, MergeReport, kway_merge, sort_run


class ImsBuilder:
    """
    Collects one superstep's incoming DATA batches as sorted runs and merges
    them into a single target-sorted file.
    """

    def __init__(
        self,
        directory: str | Path,
        output: str | Path,
        dtype: np.dtype,
        k: int,
        combiner: Optional[Combiner] = None,
        buffer_size: int = DEFAULT_BUFFER_SIZE,
        run_counters: Optional[IoCounters] = None,
        merge_counters: Optional[IoCounters] = None
    ):
        """
        Initialize builder.

        Args:
            directory: Directory for this step's runs
            output: Merged IMS file
            dtype: Envelope dtype
            k: Merge fan-in
            combiner: Applied during the final merge when given
            buffer_size: Stream buffer size b
            run_counters: Instrumentation for run writes
            merge_counters: Instrumentation for the merge
        """
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.output = Path(output)
        self.dtype = np.dtype(dtype)
        self.k = k
        self.combiner = combiner
        self.buffer_size = buffer_size
        self.run_counters = run_counters
        self.merge_counters = merge_counters

        self.runs: list[Path] = []
        self.messages = 0

    def add_batch(self, payload: bytes) -> None:
        """Sort one received batch in memory and write it as a run."""
        records = decode_records(payload, self.dtype)
        if len(records) == 0:
            return
        path = self.directory / f"run-{len(self.runs):06d}"
        write_records(path, sort_run(records), self.buffer_size, self.run_counters)
        self.runs.append(path)
        self.messages += len(records)

    def finish(self) -> MergeReport:
        """Merge all runs into the IMS file and delete them."""
        try:
            return kway_merge(
                self.runs,
                self.output,
                self.dtype,
                k=self.k,
                combiner=self.combiner,
                scratch=self.directory,
                buffer_size=self.buffer_size,
                counters=self.merge_counters,
            )
        finally:
            shutil.rmtree(self.directory, ignore_errors=True)


class MessageCursor:
    """
    Sequential scan of a target-sorted message file with one-message lookahead.

    peek() exposes the next target without consuming it; take(target)
    consumes the whole group addressed to `target`.
    """

    def __init__(
        self,
        path: str | Path,
        dtype: np.dtype,
        buffer_size: int = DEFAULT_BUFFER_SIZE,
        counters: Optional[IoCounters] = None
    ):
        self._stream = ReadStream(path, dtype, buffer_size, counters)
        self._chunks: Iterator[np.ndarray] = self._stream.iter_chunks()
        self._targets: list[int] = []
        self._payloads: list[Any] = []
        self._i = 0
        self.consumed = 0
        self.dropped = 0

    @property
    def size_bytes(self) -> int:
        return self._stream.size_bytes

    @property
    def bytes_read(self) -> int:
        return self._stream.bytes_read

    def _fill(self) -> bool:
        while self._i >= len(self._targets):
            chunk = next(self._chunks, None)
            if chunk is None:
                return False
            self._targets = chunk["target"].tolist()
            self._payloads = chunk["payload"].tolist()
            self._i = 0
        return True

    def peek(self) -> Optional[int]:
        """Target of the next message, or None at the end."""
        if not self._fill():
            return None
        return self._targets[self._i]

    def take(self, target: int) -> list[Any]:
        """Consume and return every payload addressed to `target`."""
        payloads = []
        while self._fill() and self._targets[self._i] == target:
            end = self._i
            targets = self._targets
            while end < len(targets) and targets[end] == target:
                end += 1
            payloads.extend(self._payloads[self._i:end])
            self._i = end
        self.consumed += len(payloads)
        return payloads

    def drop_below(self, target: int) -> int:
        """Discard messages addressed to ids smaller than `target`."""
        count = 0
        while self._fill() and self._targets[self._i] < target:
            self._i += 1
            count += 1
        self.dropped += count
        return count

    def drop_rest(self) -> int:
        count = 0
        while self._fill():
            count += len(self._targets) - self._i
            self._i = len(self._targets)
        self.dropped += count
        return count

    def close(self) -> None:
        self._stream.close()

    def __enter__(self) -> "MessageCursor":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
