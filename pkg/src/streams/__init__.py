"""External-memory streams: buffered files, splittable streams, k-way merge."""

from .buffered import ReadStream, WriteStream, read_all, write_records
from .counters import IoCounters, StreamStats
from .merge import Combiner, MergeReport, expected_passes, kway_merge, sort_run
from .splittable import SplittableStream, list_parts, part_path

__all__ = [
    "ReadStream", "WriteStream", "read_all", "write_records",
    "IoCounters", "StreamStats",
    "Combiner", "MergeReport", "expected_passes", "kway_merge", "sort_run",
    "SplittableStream", "list_parts", "part_path",
]
