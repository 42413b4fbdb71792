"""
The in-memory vertex-state array A of one worker.
"""

from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from ..algorithms.base import VertexProgram
from ..models.records import VERTEX_ID_DTYPE
from ..streams.buffered import DEFAULT_BUFFER_SIZE, read_all, write_records
from ..streams.counters import IoCounters
from ..utils.errors import GraphLoadError

# Program-independent columns persisted next to the edge stream
INDEX_DTYPE = np.dtype([("id", VERTEX_ID_DTYPE), ("degree", "<u8")])
RECODED_INDEX_DTYPE = np.dtype(INDEX_DTYPE.descr + [("old_id", VERTEX_ID_DTYPE)])

# Vertices converted to Python objects at a time during a compute pass
PASS_CHUNK = 4096


class StateArray:
    """
    Vertex states sorted by id, in the same order as the adjacency lists
    of the edge stream. Recoded arrays also carry each vertex's original id.
    """

    def __init__(self, records: np.ndarray):
        self.records = records

    @classmethod
    def from_index(
        cls,
        index: np.ndarray,
        program: VertexProgram,
        recoded: bool = False
    ) -> "StateArray":
        """
        Build fresh states (initial value, active) from persisted index columns.

        Args:
            index: INDEX_DTYPE or RECODED_INDEX_DTYPE records in id order
            program: Program providing the value dtype and initial values
            recoded: Keep the old_id column
        """
        layout = program.layout
        dtype = layout.recoded_state_dtype if recoded else layout.state_dtype
        records = np.zeros(len(index), dtype=dtype)
        records["id"] = index["id"]
        records["degree"] = index["degree"]
        records["active"] = 1
        if recoded:
            records["old_id"] = index["old_id"]
        if len(index):
            ids = index["old_id"] if recoded else index["id"]
            records["value"] = [program.initial_value(v) for v in ids.tolist()]
        array = cls(records)
        array.check_sorted()
        return array

    # ---- properties ----

    def __len__(self) -> int:
        return len(self.records)

    @property
    def recoded(self) -> bool:
        return "old_id" in (self.records.dtype.names or ())

    @property
    def ids(self) -> np.ndarray:
        return self.records["id"]

    @property
    def output_ids(self) -> np.ndarray:
        """Ids written to result files (original ids in recoded mode)."""
        return self.records["old_id"] if self.recoded else self.records["id"]

    @property
    def nbytes(self) -> int:
        return self.records.nbytes

    def total_degree(self) -> int:
        return int(self.records["degree"].sum()) if len(self) else 0

    def any_active(self) -> bool:
        return bool(self.records["active"].any()) if len(self) else False

    def check_sorted(self) -> None:
        """Ids strictly increasing (sorted, unique)."""
        ids = self.records["id"]
        if len(ids) > 1:
            bad = np.flatnonzero(ids[1:] <= ids[:-1])
            if len(bad):
                i = int(bad[0])
                raise GraphLoadError(
                    f"Duplicate or unsorted vertex id {int(ids[i + 1])} after {int(ids[i])}"
                )

    def position(self, vertex_id: int) -> Optional[int]:
        """Array position of a vertex id, or None."""
        ids = self.records["id"]
        pos = int(np.searchsorted(ids, vertex_id))
        if pos < len(ids) and int(ids[pos]) == vertex_id:
            return pos
        return None

    def find_old_id(self, old_id: int) -> Optional[int]:
        """Recoded id of the vertex with this original id, or None."""
        matches = np.flatnonzero(self.records["old_id"] == old_id)
        if len(matches) == 0:
            return None
        return int(self.records["id"][matches[0]])

    # ---- compute-pass access ----

    def chunks(self, size: int = PASS_CHUNK) -> Iterator[tuple[int, int]]:
        """[start, stop) ranges covering the array."""
        for start in range(0, len(self), size):
            yield start, min(start + size, len(self))

    def load_chunk(self, start: int, stop: int) -> tuple[list, list, list, list]:
        """(ids, values, active flags, degrees) of a range as Python lists."""
        part = self.records[start:stop]
        return (
            part["id"].tolist(),
            part["value"].tolist(),
            part["active"].astype(bool).tolist(),
            part["degree"].tolist(),
        )

    def store_chunk(self, start: int, values: list, active: list) -> None:
        stop = start + len(values)
        self.records["value"][start:stop] = values
        self.records["active"][start:stop] = active

    # ---- persistence ----

    def index(self) -> np.ndarray:
        """Program-independent columns for persisting."""
        dtype = RECODED_INDEX_DTYPE if self.recoded else INDEX_DTYPE
        index = np.zeros(len(self), dtype=dtype)
        for name in dtype.names:
            index[name] = self.records[name]
        return index

    def save(
        self,
        path: str | Path,
        buffer_size: int = DEFAULT_BUFFER_SIZE,
        counters: Optional[IoCounters] = None
    ) -> None:
        write_records(path, self.index(), buffer_size, counters)


def load_index(
    path: str | Path,
    recoded: bool = False,
    buffer_size: int = DEFAULT_BUFFER_SIZE,
    counters: Optional[IoCounters] = None
) -> np.ndarray:
    """Read a persisted index file (A.bin or A_rec.bin)."""
    dtype = RECODED_INDEX_DTYPE if recoded else INDEX_DTYPE
    return read_all(path, dtype, buffer_size, counters)
