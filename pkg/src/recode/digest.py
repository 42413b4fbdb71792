"""
In-memory message arrays of recoded mode.

DigestArray (A_r) folds incoming messages into one slot per local vertex;
CombineArray (A_s) folds outgoing messages per destination position before
they are sent. Slots holding the identity element mean "no message".
"""

from typing import Iterable

import numpy as np

from ..algorithms.base import VertexProgram
from ..models.partition import new_id
from ..models.records import envelope_dtype
from ..utils.errors import ProtocolError


class DigestArray:
    """A_r: per-position fold of the messages received by this worker in one step."""

    def __init__(self, size: int, program: VertexProgram, rank: int, num_workers: int):
        """
        Initialize with every slot set to the identity element.

        Args:
            size: |V(W)| of this worker
            program: Program declaring the combiner and identity
            rank: This worker's index
            num_workers: |W|
        """
        self.program = program
        self.rank = rank
        self.num_workers = num_workers
        self.identity = program.identity
        self.slots = np.full(size, program.identity, dtype=program.message_dtype)
        self.messages = 0

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def nbytes(self) -> int:
        return self.slots.nbytes

    def digest(self, envelopes: np.ndarray) -> None:
        """
        Combine a batch of envelopes into their slots (pos = target // n).

        Raises:
            ProtocolError: A target is not owned by this worker
        """
        if len(envelopes) == 0:
            return
        targets = envelopes["target"]
        n = np.uint64(self.num_workers)
        foreign = np.flatnonzero(targets % n != np.uint64(self.rank))
        if len(foreign):
            raise ProtocolError(
                f"Worker {self.rank} received a message for vertex "
                f"{int(targets[foreign[0]])}, owned by worker "
                f"{int(targets[foreign[0]]) % self.num_workers}"
            )
        positions = (targets // n).astype(np.intp)
        if int(positions.max()) >= len(self.slots):
            raise ProtocolError(
                f"Worker {self.rank} received a message for vertex "
                f"{int(targets[int(np.argmax(positions))])} beyond its {len(self.slots)} vertices"
            )
        self.program.fold_into(self.slots, positions, envelopes["payload"])
        self.messages += len(envelopes)

    def received(self) -> np.ndarray:
        """Boolean mask of slots that hold a combined message."""
        return self.slots != self.identity


class CombineArray:
    """A_s: per-position fold of outgoing messages, drained once per batch."""

    def __init__(self, size: int, program: VertexProgram, num_workers: int):
        """
        Initialize with every slot set to the identity element.

        Args:
            size: max |V(W)| over all workers
            program: Program declaring the combiner and identity
            num_workers: |W|
        """
        self.program = program
        self.num_workers = num_workers
        self.identity = program.identity
        self.slots = np.full(size, program.identity, dtype=program.message_dtype)
        self._touched = np.zeros(size, dtype=bool)

    @property
    def nbytes(self) -> int:
        return self.slots.nbytes + self._touched.nbytes

    def combine(self, envelopes: np.ndarray) -> None:
        """Fold envelopes bound for one destination into their slots."""
        if len(envelopes) == 0:
            return
        positions = (envelopes["target"] // np.uint64(self.num_workers)).astype(np.intp)
        self.program.fold_into(self.slots, positions, envelopes["payload"])
        self._touched[positions] = True

    def drain(self, dest: int, dtype: np.dtype) -> np.ndarray:
        """
        Emit (n * pos + dest, A_s[pos]) for every slot not equal to the
        identity, in ascending position order, and reset drained slots.

        Args:
            dest: Destination worker index
            dtype: Envelope dtype of the output

        Returns:
            Envelope array, one record per target
        """
        positions = np.flatnonzero(self._touched)
        payloads = self.slots[positions]
        keep = payloads != self.identity
        positions = positions[keep]

        out = np.empty(len(positions), dtype=dtype)
        out["target"] = new_id(positions.astype(np.uint64), np.uint64(dest), np.uint64(self.num_workers))
        out["payload"] = payloads[keep]

        touched = np.flatnonzero(self._touched)
        self.slots[touched] = self.identity
        self._touched[touched] = False
        return out

    def is_clean(self) -> bool:
        """Every slot equals the identity element."""
        return bool((self.slots == self.identity).all())


def combine_outgoing(
    envelope_batches: Iterable[np.ndarray],
    combine_array: CombineArray,
    dest: int
) -> np.ndarray:
    """
    Fold every message of the given OMS files into A_s and drain it.

    Args:
        envelope_batches: Envelope chunks read from one destination's OMS files,
            consumed one at a time
        combine_array: The worker's A_s
        dest: Destination worker index

    Returns:
        One envelope per target, targets in ascending position order
    """
    for envelopes in envelope_batches:
        combine_array.combine(envelopes)
    return combine_array.drain(dest, envelope_dtype(combine_array.slots.dtype))
