"""
Batches: the unit of transfer between workers, and their wire frames.

Frame = kind (1 byte) + superstep (8 bytes) + payload length (8 bytes) +
payload, all little-endian.
"""

import json
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from ..utils.errors import FramingError

FRAME_HEADER = struct.Struct("<BQQ")


class BatchKind(IntEnum):
    """What a batch carries."""
    DATA = 0
    END_TAG = 1
    CONTROL = 2
    BARRIER = 3


@dataclass(frozen=True)
class Batch:
    """One transfer on a channel."""
    kind: BatchKind
    superstep: int
    payload: bytes = b""

    @classmethod
    def data(cls, superstep: int, payload: bytes) -> "Batch":
        return cls(BatchKind.DATA, superstep, bytes(payload))

    @classmethod
    def end_tag(cls, superstep: int) -> "Batch":
        return cls(BatchKind.END_TAG, superstep)

    @classmethod
    def control(cls, superstep: int, body: dict) -> "Batch":
        return cls(BatchKind.CONTROL, superstep, json.dumps(body).encode())

    @classmethod
    def barrier(cls, superstep: int) -> "Batch":
        return cls(BatchKind.BARRIER, superstep)

    def control_body(self) -> dict:
        """Decoded JSON body of a CONTROL batch."""
        if self.kind != BatchKind.CONTROL:
            raise FramingError(f"{self.kind.name} batch has no control body")
        return json.loads(self.payload.decode())

    def validate(self, envelope_size: Optional[int] = None) -> None:
        """Check payload shape for the batch kind."""
        if self.kind == BatchKind.END_TAG and self.payload:
            raise FramingError("END_TAG batch must have an empty payload")
        if (
            self.kind == BatchKind.DATA
            and envelope_size
            and len(self.payload) % envelope_size
        ):
            raise FramingError(
                f"DATA payload of {len(self.payload)} bytes is not a multiple "
                f"of the {envelope_size}-byte envelope"
            )

    def encode(self) -> bytes:
        """Serialize to one wire frame."""
        return FRAME_HEADER.pack(int(self.kind), self.superstep, len(self.payload)) + self.payload

    @classmethod
    def decode(cls, frame: bytes) -> "Batch":
        """
        Parse one complete wire frame.

        Args:
            frame: Header plus payload

        Returns:
            Decoded batch
        """
        if len(frame) < FRAME_HEADER.size:
            raise FramingError(
                f"Frame of {len(frame)} bytes is shorter than the {FRAME_HEADER.size}-byte header"
            )
        kind, superstep, length = FRAME_HEADER.unpack_from(frame)
        if len(frame) - FRAME_HEADER.size != length:
            raise FramingError(
                f"Frame declares {length} payload bytes but carries "
                f"{len(frame) - FRAME_HEADER.size}"
            )
        try:
            kind = BatchKind(kind)
        except ValueError:
            raise FramingError(f"Unknown batch kind {kind}") from None
        return cls(kind, superstep, bytes(frame[FRAME_HEADER.size:]))

    def __len__(self) -> int:
        return len(self.payload)

    def __repr__(self) -> str:
        return f"Batch({self.kind.name}, step={self.superstep}, {len(self.payload)}B)"
