"""
Per-superstep context handed to vertex programs.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional


def _no_sink(*_args: Any) -> None:
    raise RuntimeError("This context is not attached to an engine")


@dataclass
class SuperstepContext:
    """
    Read-only superstep facts plus the engine hooks a compute() call may use.

    `aggregated` is the merged aggregator value of the previous superstep
    (None in superstep 1 or when the program declares no aggregator).
    """
    superstep: int
    num_vertices: int
    num_workers: int
    aggregated: Any = None

    _send: Callable[[int, Any], None] = field(default=_no_sink, repr=False)
    _contribute: Callable[[Any], None] = field(default=_no_sink, repr=False)

    messages_sent: int = field(default=0, repr=False)

    def send_message(self, target: int, payload: Any) -> None:
        """Send `payload` to vertex `target`, delivered next superstep."""
        self._send(target, payload)
        self.messages_sent += 1

    def send_to_all(self, targets: Iterable[int], payload: Any) -> None:
        """Send the same payload to every target."""
        send = self._send
        count = 0
        for target in targets:
            send(target, payload)
            count += 1
        self.messages_sent += count

    def aggregate(self, value: Any) -> None:
        """Contribute a value to the program's aggregator."""
        self._contribute(value)


@dataclass
class ControlRecord:
    """
    Per-worker control data merged across workers once per superstep.

    Booleans merge by OR, counts and `sums` entries by sum, `max_partition`
    by max, `lookups` entries by min, `aggregate` by the program's merge.
    """
    any_message_sent: bool = False
    any_vertex_active: bool = False
    aggregate: Any = None
    num_vertices: int = 0
    max_partition: int = 0
    messages: int = 0
    lookups: dict[str, int] = field(default_factory=dict)
    sums: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "any_message_sent": self.any_message_sent,
            "any_vertex_active": self.any_vertex_active,
            "aggregate": self.aggregate,
            "num_vertices": self.num_vertices,
            "max_partition": self.max_partition,
            "messages": self.messages,
            "lookups": self.lookups,
            "sums": self.sums,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ControlRecord":
        return cls(
            any_message_sent=bool(data.get("any_message_sent", False)),
            any_vertex_active=bool(data.get("any_vertex_active", False)),
            aggregate=data.get("aggregate"),
            num_vertices=int(data.get("num_vertices", 0)),
            max_partition=int(data.get("max_partition", 0)),
            messages=int(data.get("messages", 0)),
            lookups={k: int(v) for k, v in data.get("lookups", {}).items()},
            sums={k: int(v) for k, v in data.get("sums", {}).items()},
        )

    def should_terminate(self) -> bool:
        """All vertices halted and no message pending."""
        return not self.any_message_sent and not self.any_vertex_active


def merge_control_records(
    records: Iterable[ControlRecord],
    merge_aggregate: Optional[Callable[[Any, Any], Any]] = None
) -> ControlRecord:
    """
    Order-independent merge of control records.

    Args:
        records: One record per worker
        merge_aggregate: Associative, commutative merge of aggregator values

    Returns:
        Merged record
    """
    merged = ControlRecord()
    for record in records:
        merged.any_message_sent |= record.any_message_sent
        merged.any_vertex_active |= record.any_vertex_active
        merged.num_vertices += record.num_vertices
        merged.max_partition = max(merged.max_partition, record.max_partition)
        merged.messages += record.messages
        for key, value in record.lookups.items():
            current = merged.lookups.get(key)
            merged.lookups[key] = value if current is None else min(current, value)
        for key, value in record.sums.items():
            merged.sums[key] = merged.sums.get(key, 0) + value
        if record.aggregate is None:
            continue
        if merged.aggregate is None:
            merged.aggregate = record.aggregate
        elif merge_aggregate is not None:
            merged.aggregate = merge_aggregate(merged.aggregate, record.aggregate)
    return merged
