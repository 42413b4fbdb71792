"""
External k-way merge of sorted runs, with optional grouped combining.

Records must start with a little-endian 8-byte `target` field; runs are files
of such records sorted by target. Equal targets keep run order (stable by run
index), so without a combiner the output is deterministic.
"""

import heapq
import math
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator, Optional, Sequence

import numpy as np

from .buffered import DEFAULT_BUFFER_SIZE, ReadStream, WriteStream
from .counters import IoCounters
from ..utils.errors import UnsortedRunError
from ..utils.logger import get_logger

logger = get_logger()

# Records decoded per combine batch while merging
COMBINE_BATCH = 4096


@dataclass(frozen=True)
class Combiner:
    """
    Associative, commutative fold over payloads of one target.

    `ufunc` (np.add, np.minimum, ...) enables the vectorized path; without it
    groups are folded with `combine` in Python.
    """
    combine: Callable[[Any, Any], Any]
    ufunc: Optional[np.ufunc] = None

    def reduce_groups(self, records: np.ndarray) -> np.ndarray:
        """
        Fold each run of equal targets in a target-sorted array into one record.

        Args:
            records: Structured array with `target` and `payload`, sorted by target

        Returns:
            One record per distinct target, in target order
        """
        if len(records) <= 1:
            return records.copy()
        targets = records["target"]
        starts = np.flatnonzero(np.concatenate(([True], targets[1:] != targets[:-1])))
        out = np.empty(len(starts), dtype=records.dtype)
        out["target"] = targets[starts]
        if self.ufunc is not None:
            out["payload"] = self.ufunc.reduceat(records["payload"], starts)
            return out
        bounds = starts.tolist() + [len(records)]
        payloads = records["payload"]
        combine = self.combine
        for i in range(len(starts)):
            group = payloads[bounds[i]:bounds[i + 1]].tolist()
            value = group[0]
            for payload in group[1:]:
                value = combine(value, payload)
            out["payload"][i] = value
        return out


@dataclass
class MergeReport:
    """What one kway_merge call did."""
    runs: int
    passes: int
    records_in: int = 0
    records_out: int = 0


def sort_run(records: np.ndarray) -> np.ndarray:
    """Stable in-memory sort of records by target."""
    order = np.argsort(records["target"], kind="stable")
    return records[order]


def expected_passes(num_runs: int, k: int) -> int:
    """ceil(log_k(num_runs)); zero for zero or one run."""
    if num_runs <= 1:
        return 0
    passes = 0
    while num_runs > 1:
        num_runs = math.ceil(num_runs / k)
        passes += 1
    return passes


def _iter_run(
    path: Path,
    dtype: np.dtype,
    buffer_size: int,
    counters: Optional[IoCounters]
) -> Iterator[tuple[int, bytes]]:
    """Yield (target, raw record) from one run, checking sortedness per buffer."""
    size = dtype.itemsize
    previous = None
    position = 0
    with ReadStream(path, dtype, buffer_size, counters) as stream:
        for chunk in stream.iter_chunks():
            targets = chunk["target"]
            if previous is not None and targets[0] < previous:
                raise UnsortedRunError(str(path), position, previous, int(targets[0]))
            if len(targets) > 1:
                bad = np.flatnonzero(targets[1:] < targets[:-1])
                if len(bad):
                    i = int(bad[0])
                    raise UnsortedRunError(
                        str(path), position + i + 1, int(targets[i]), int(targets[i + 1])
                    )
            raw = chunk.tobytes()
            for i, target in enumerate(targets.tolist()):
                yield target, raw[i * size:(i + 1) * size]
            previous = int(targets[-1])
            position += len(targets)


def _merge_group(
    runs: Sequence[Path],
    output: Path,
    dtype: np.dtype,
    combiner: Optional[Combiner],
    buffer_size: int,
    counters: Optional[IoCounters]
) -> tuple[int, int]:
    """One merge pass over at most k runs into `output`; returns (in, out) counts."""
    iterators = [_iter_run(path, dtype, buffer_size, counters) for path in runs]
    merged = heapq.merge(*iterators, key=lambda entry: entry[0])

    records_in = 0
    records_out = 0
    with WriteStream(output, buffer_size, counters) as writer:
        if combiner is None:
            for _target, raw in merged:
                writer.write(raw)
                records_in += 1
            return records_in, records_in

        pending: list[bytes] = []
        for _target, raw in merged:
            pending.append(raw)
            records_in += 1
            if len(pending) >= COMBINE_BATCH:
                folded = combiner.reduce_groups(np.frombuffer(b"".join(pending), dtype=dtype))
                # last group may continue in the next batch
                writer.write_items(folded[:-1])
                records_out += len(folded) - 1
                pending = [folded[-1:].tobytes()]
        if pending:
            folded = combiner.reduce_groups(np.frombuffer(b"".join(pending), dtype=dtype))
            writer.write_items(folded)
            records_out += len(folded)
    return records_in, records_out


def kway_merge(
    runs: Sequence[str | Path],
    output: str | Path,
    dtype: np.dtype,
    k: int = 1000,
    combiner: Optional[Combiner] = None,
    scratch: Optional[str | Path] = None,
    buffer_size: int = DEFAULT_BUFFER_SIZE,
    counters: Optional[IoCounters] = None
) -> MergeReport:
    """
    Merge target-sorted runs into one sorted file.

    Merges consecutive groups of k runs per pass until one run remains
    (ceil(log_k(#runs)) passes), holding k input buffers plus one output
    buffer. With a combiner every distinct target appears once in the output.

    Args:
        runs: Input run files, each sorted by target
        output: Output file
        dtype: Record dtype (first field `target`)
        k: Merge fan-in (>= 2)
        combiner: Optional fold applied in every pass
        scratch: Directory for intermediate runs (defaults to output's directory)
        buffer_size: Stream buffer size b
        counters: Optional shared instrumentation

    Returns:
        MergeReport with the number of passes
    """
    if k < 2:
        raise ValueError(f"merge fan-in k must be >= 2, got {k}")
    dtype = np.dtype(dtype)
    if not dtype.names or dtype.names[0] != "target":
        raise ValueError("merge records must start with a 'target' field")

    output = Path(output)
    current = [Path(run) for run in runs]
    report = MergeReport(runs=len(current), passes=0)

    if not current:
        WriteStream(output, buffer_size, counters).close()
        return report

    if len(current) == 1:
        # nothing to merge: copy, or fold adjacent equal targets
        if combiner is None:
            shutil.copyfile(current[0], output)
            size = output.stat().st_size
            if counters is not None:
                counters.add(bytes_read=size, bytes_written=size, files_created=1)
            report.records_in = report.records_out = size // dtype.itemsize
        else:
            report.records_in, report.records_out = _merge_group(
                current, output, dtype, combiner, buffer_size, counters
            )
        return report

    scratch_dir = Path(scratch) if scratch is not None else output.parent
    scratch_dir.mkdir(parents=True, exist_ok=True)
    intermediates: set[Path] = set()

    try:
        while len(current) > k:
            report.passes += 1
            next_runs = []
            for group_index in range(0, len(current), k):
                group = current[group_index:group_index + k]
                target = scratch_dir / f"merge-{output.name}-p{report.passes}-{group_index // k:06d}"
                records_in, _ = _merge_group(group, target, dtype, combiner, buffer_size, counters)
                if report.passes == 1:
                    report.records_in += records_in
                next_runs.append(target)
                intermediates.add(target)
                for path in group:
                    if path in intermediates:
                        path.unlink(missing_ok=True)
                        intermediates.discard(path)
            logger.debug(
                f"Merge pass {report.passes}: {len(current)} runs -> {len(next_runs)}"
            )
            current = next_runs

        report.passes += 1
        records_in, records_out = _merge_group(
            current, output, dtype, combiner, buffer_size, counters
        )
        if report.passes == 1:
            report.records_in = records_in
        report.records_out = records_out
    finally:
        for path in intermediates:
            path.unlink(missing_ok=True)

    return report
