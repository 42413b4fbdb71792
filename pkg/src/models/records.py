"""
Data models for vertex states, adjacency items and message envelopes,
plus their fixed-width little-endian binary layouts.
"""

import struct
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Iterator, Optional

import numpy as np

from ..utils.errors import FramingError

VERTEX_ID_DTYPE = np.dtype("<u8")
WEIGHT_DTYPE = np.dtype("<f8")

# One-character struct codes for the scalar payload kinds we can pack quickly
_STRUCT_CODES = {
    "f8": "d", "f4": "f",
    "u8": "Q", "i8": "q",
    "u4": "I", "i4": "i",
    "u2": "H", "i2": "h",
    "u1": "B", "i1": "b",
}


@dataclass
class VertexState:
    """In-memory record of one vertex: (id, value, active, degree)."""
    id: int
    value: Any
    active: bool = True
    degree: int = 0

    def vote_to_halt(self) -> None:
        """Deactivate until a message arrives."""
        self.active = False

    def __str__(self) -> str:
        flag = "active" if self.active else "halted"
        return f"Vertex {self.id} [{flag}] d={self.degree} value={self.value}"


@dataclass(frozen=True)
class AdjacencyItem:
    """One entry of an adjacency list."""
    neighbor: int
    weight: Optional[float] = None


@dataclass(frozen=True)
class MessageEnvelope:
    """Destination vertex id plus payload."""
    target: int
    payload: Any


def _to_python(value: Any) -> Any:
    """Convert numpy scalars / structured scalars to plain Python values."""
    if isinstance(value, np.void):
        return tuple(_to_python(v) for v in value.item())
    if isinstance(value, np.generic):
        return value.item()
    return value


def decode_records(data: bytes | memoryview, dtype: np.dtype) -> np.ndarray:
    """
    Decode a whole number of fixed-size records.

    Args:
        data: Raw bytes
        dtype: Record dtype

    Returns:
        Read-only structured array view over the bytes
    """
    if len(data) % dtype.itemsize:
        raise FramingError(
            f"{len(data)} bytes is not a multiple of the {dtype.itemsize}-byte record size"
        )
    return np.frombuffer(data, dtype=dtype)


class Adjacency(Sequence):
    """
    Read-only adjacency list backed by a structured array.

    Items are materialized as AdjacencyItem lazily; `neighbors` and `weights`
    give plain lists for tight loops.
    """

    def __init__(self, records: np.ndarray):
        self._records = records
        self._neighbors: Optional[list[int]] = None

    def __len__(self) -> int:
        return len(self._records)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        record = self._records[index]
        weight = float(record["weight"]) if self.weighted else None
        return AdjacencyItem(neighbor=int(record["neighbor"]), weight=weight)

    def __iter__(self) -> Iterator[AdjacencyItem]:
        for i in range(len(self)):
            yield self[i]

    @property
    def weighted(self) -> bool:
        return "weight" in (self._records.dtype.names or ())

    @property
    def neighbors(self) -> list[int]:
        if self._neighbors is None:
            self._neighbors = self._records["neighbor"].tolist()
        return self._neighbors

    @property
    def weights(self) -> Optional[list[float]]:
        if not self.weighted:
            return None
        return self._records["weight"].tolist()

    @property
    def records(self) -> np.ndarray:
        return self._records


class RecordLayout:
    """
    Binary layouts of one algorithm's records.

    VertexState = id(8) + value + active(1) + degree(8)
    AdjacencyItem = neighbor(8) [+ weight(8)]
    MessageEnvelope = target(8) + payload
    """

    def __init__(
        self,
        value_dtype: Any,
        message_dtype: Any,
        weighted: bool = False
    ):
        """
        Initialize layout.

        Args:
            value_dtype: Vertex value dtype (little-endian)
            message_dtype: Message payload dtype (little-endian)
            weighted: Whether adjacency items carry a weight
        """
        self.value_dtype = np.dtype(value_dtype)
        self.message_dtype = np.dtype(message_dtype)
        self.weighted = weighted

        self.state_dtype = np.dtype([
            ("id", VERTEX_ID_DTYPE),
            ("value", self.value_dtype),
            ("active", "u1"),
            ("degree", "<u8"),
        ])
        self.recoded_state_dtype = np.dtype(
            self.state_dtype.descr + [("old_id", VERTEX_ID_DTYPE)]
        )

        adjacency_fields = [("neighbor", VERTEX_ID_DTYPE)]
        if weighted:
            adjacency_fields.append(("weight", WEIGHT_DTYPE))
        self.adjacency_dtype = np.dtype(adjacency_fields)

        self.envelope_dtype = envelope_dtype(self.message_dtype)
        self._envelope_struct = _scalar_struct(self.message_dtype)

    @property
    def largest_record(self) -> int:
        return max(
            self.recoded_state_dtype.itemsize,
            self.adjacency_dtype.itemsize,
            self.envelope_dtype.itemsize,
        )

    # ---- vertex states ----

    def serialize_state(self, state: VertexState) -> bytes:
        record = np.array(
            [(state.id, state.value, 1 if state.active else 0, state.degree)],
            dtype=self.state_dtype,
        )
        return record.tobytes()

    def deserialize_state(self, data: bytes) -> VertexState:
        record = self._single(data, self.state_dtype)
        return VertexState(
            id=int(record["id"]),
            value=_to_python(record["value"]),
            active=bool(record["active"]),
            degree=int(record["degree"]),
        )

    # ---- adjacency items ----

    def serialize_adjacency(self, item: AdjacencyItem) -> bytes:
        if self.weighted:
            weight = 0.0 if item.weight is None else item.weight
            row = (item.neighbor, weight)
        else:
            row = (item.neighbor,)
        return np.array([row], dtype=self.adjacency_dtype).tobytes()

    def deserialize_adjacency(self, data: bytes) -> AdjacencyItem:
        record = self._single(data, self.adjacency_dtype)
        weight = float(record["weight"]) if self.weighted else None
        return AdjacencyItem(neighbor=int(record["neighbor"]), weight=weight)

    # ---- message envelopes ----

    def serialize_envelope(self, envelope: MessageEnvelope) -> bytes:
        return self.pack_envelope(envelope.target, envelope.payload)

    def pack_envelope(self, target: int, payload: Any) -> bytes:
        """Encode one envelope without building a dataclass."""
        if self._envelope_struct is not None:
            return self._envelope_struct.pack(target, payload)
        return np.array([(target, payload)], dtype=self.envelope_dtype).tobytes()

    def deserialize_envelope(self, data: bytes) -> MessageEnvelope:
        record = self._single(data, self.envelope_dtype)
        return MessageEnvelope(
            target=int(record["target"]),
            payload=_to_python(record["payload"]),
        )

    @staticmethod
    def _single(data: bytes, dtype: np.dtype) -> np.void:
        if len(data) != dtype.itemsize:
            raise FramingError(
                f"Expected exactly {dtype.itemsize} bytes, got {len(data)}"
            )
        return np.frombuffer(data, dtype=dtype)[0]


def envelope_dtype(payload_dtype: Any) -> np.dtype:
    """Structured dtype of (target, payload) records."""
    return np.dtype([("target", VERTEX_ID_DTYPE), ("payload", np.dtype(payload_dtype))])


def payload_to_python(value: Any) -> Any:
    """Public alias used by the engine when handing payloads to programs."""
    return _to_python(value)


def _scalar_struct(dtype: np.dtype) -> Optional[struct.Struct]:
    if dtype.names is not None or dtype.byteorder == ">":
        return None
    code = _STRUCT_CODES.get(f"{dtype.kind}{dtype.itemsize}")
    if code is None:
        return None
    return struct.Struct("<Q" + code)
