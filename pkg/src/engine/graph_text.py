"""
Graph text format: one vertex per line,

    id<TAB>d(v)<SPACE>nbr1 [w1] nbr2 [w2] ...

Blank lines and lines starting with '#' are ignored.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from ..models.partition import MASK64, mix64_array
from ..utils.errors import GraphParseError

_SCAN_CHUNK = 1 << 20


@dataclass
class ParsedVertex:
    """One parsed line."""
    id: int
    neighbors: list[int]
    weights: Optional[list[float]]
    offset: int = 0

    @property
    def degree(self) -> int:
        return len(self.neighbors)


def _unsigned(token: str, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ValueError(f"{what} '{token}' is not an unsigned integer") from None
    if not 0 <= value <= MASK64:
        raise ValueError(f"{what} {value} does not fit in 64 bits")
    return value


def parse_line(line: str, weighted: Optional[bool]) -> tuple[int, list[int], Optional[list[float]]]:
    """
    Parse one vertex line.

    Args:
        line: Line text without the newline
        weighted: Whether items carry weights (None infers it from the token count)

    Returns:
        (id, neighbors, weights or None)

    Raises:
        ValueError: With the reason the line is malformed
    """
    id_part, sep, rest = line.partition("\t")
    if not sep:
        raise ValueError("missing TAB after the vertex id")
    vertex_id = _unsigned(id_part.strip(), "vertex id")

    tokens = rest.split()
    if not tokens:
        raise ValueError("missing degree field")
    degree = _unsigned(tokens[0], "degree")
    items = tokens[1:]

    if weighted is None:
        weighted = degree > 0 and len(items) == 2 * degree
    expected = degree * (2 if weighted else 1)
    if len(items) != expected:
        raise ValueError(
            f"degree {degree} needs {expected} adjacency tokens, found {len(items)}"
        )

    if not weighted:
        return vertex_id, [_unsigned(t, "neighbor id") for t in items], None

    neighbors = [_unsigned(t, "neighbor id") for t in items[0::2]]
    try:
        weights = [float(t) for t in items[1::2]]
    except ValueError as e:
        raise ValueError(f"bad edge weight: {e}") from None
    return vertex_id, neighbors, weights


def line_number_at(path: str | Path, offset: int) -> int:
    """1-based number of the line starting at byte `offset`."""
    count = 0
    remaining = offset
    with open(path, "rb") as f:
        while remaining > 0:
            chunk = f.read(min(_SCAN_CHUNK, remaining))
            if not chunk:
                break
            count += chunk.count(b"\n")
            remaining -= len(chunk)
    return count + 1


def byte_range(size: int, rank: int, num_workers: int) -> tuple[int, int]:
    """Raw byte range [start, end) of worker `rank` before line alignment."""
    return size * rank // num_workers, size * (rank + 1) // num_workers


def iter_portion(
    path: str | Path,
    rank: int = 0,
    num_workers: int = 1,
    weighted: Optional[bool] = False
) -> Iterator[ParsedVertex]:
    """
    Parse the lines owned by one worker.

    A line belongs to the worker whose byte range contains its first byte,
    so the n portions partition the file.

    Args:
        path: Graph text file
        rank: Worker index
        num_workers: Number of portions
        weighted: Whether items carry weights

    Yields:
        ParsedVertex per non-blank line
    """
    path = Path(path)
    start, end = byte_range(path.stat().st_size, rank, num_workers)
    with open(path, "rb") as f:
        if start > 0:
            f.seek(start - 1)
            f.readline()
        position = f.tell()
        while position < end:
            line = f.readline()
            if not line:
                break
            offset = position
            position += len(line)
            text = line.decode("utf-8", errors="replace").rstrip("\r\n")
            if not text.strip() or text.lstrip().startswith("#"):
                continue
            try:
                vertex_id, neighbors, weights = parse_line(text, weighted)
            except ValueError as e:
                raise GraphParseError(line_number_at(path, offset), str(e), str(path)) from None
            yield ParsedVertex(vertex_id, neighbors, weights, offset)


def edge_fingerprint(sources: np.ndarray, targets: np.ndarray) -> int:
    """
    Order-independent 64-bit digest of a directed edge multiset.

    fingerprint(E) == fingerprint(reversed E) for every symmetric graph.
    """
    if len(sources) == 0:
        return 0
    sources = np.asarray(sources, dtype=np.uint64)
    targets = np.asarray(targets, dtype=np.uint64)
    mixed = mix64_array(mix64_array(sources) ^ targets)
    return int(mixed.sum(dtype=np.uint64))
