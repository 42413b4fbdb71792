"""
I/O instrumentation shared by all streams of a worker.
"""

import threading
from dataclasses import dataclass, field, fields


@dataclass
class IoCounters:
    """Byte and operation counts for one stream role."""
    bytes_read: int = 0
    bytes_written: int = 0
    refills: int = 0
    flushes: int = 0
    seeks: int = 0
    files_created: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, **deltas: int) -> None:
        """Increment counters atomically."""
        with self._lock:
            for name, delta in deltas.items():
                setattr(self, name, getattr(self, name) + delta)

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "_lock"}


class StreamStats:
    """
    Registry of IoCounters keyed by stream role (SE, SI, OMS, IMS, MERGE, ...).

    Roles are created on first use; snapshots are plain dicts for JSON stats.
    """

    def __init__(self):
        self._counters: dict[str, IoCounters] = {}
        self._lock = threading.Lock()

    def __getitem__(self, role: str) -> IoCounters:
        with self._lock:
            counters = self._counters.get(role)
            if counters is None:
                counters = IoCounters()
                self._counters[role] = counters
            return counters

    def snapshot(self) -> dict[str, dict[str, int]]:
        with self._lock:
            roles = dict(self._counters)
        return {role: counters.snapshot() for role, counters in roles.items()}

    @staticmethod
    def delta(after: dict, before: dict) -> dict[str, dict[str, int]]:
        """Per-role difference of two snapshots."""
        result = {}
        for role, values in after.items():
            base = before.get(role, {})
            result[role] = {k: v - base.get(k, 0) for k, v in values.items()}
        return result
