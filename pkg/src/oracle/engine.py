"""
Single-process, in-memory Pregel runner used as ground truth.

Runs the same VertexProgram objects as the workers, with no streams and no
transport: synchronous delivery, reactivation on receipt, termination when
every vertex halted and no message is pending.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..algorithms.base import VertexProgram
from ..engine.graph_text import iter_portion
from ..models.context import SuperstepContext
from ..models.records import Adjacency, VertexState
from ..utils.errors import GraphLoadError
from ..utils.logger import get_logger

logger = get_logger()


@dataclass
class OracleGraph:
    """Adjacency lists by vertex id (weights parallel to neighbors, or None)."""
    neighbors: dict[int, list[int]]
    weights: Optional[dict[int, list[float]]] = None

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    @property
    def num_vertices(self) -> int:
        return len(self.neighbors)

    @property
    def num_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.neighbors.values())

    @classmethod
    def from_text(cls, path: str | Path, weighted: bool = False) -> "OracleGraph":
        """
        Read a whole graph file.

        Raises:
            GraphParseError: Malformed line
            GraphLoadError: Duplicate vertex id
        """
        neighbors: dict[int, list[int]] = {}
        weights: dict[int, list[float]] = {}
        for vertex in iter_portion(path, 0, 1, weighted):
            if vertex.id in neighbors:
                raise GraphLoadError(f"Duplicate vertex id {vertex.id}")
            neighbors[vertex.id] = vertex.neighbors
            if weighted:
                weights[vertex.id] = vertex.weights or []
        return cls(neighbors, weights if weighted else None)

    def adjacency(self, vertex_id: int, dtype: np.dtype) -> Adjacency:
        nbrs = self.neighbors[vertex_id]
        records = np.zeros(len(nbrs), dtype=dtype)
        records["neighbor"] = nbrs
        if self.weights is not None and "weight" in (dtype.names or ()):
            records["weight"] = self.weights[vertex_id]
        return Adjacency(records)


@dataclass
class OracleResult:
    """Final values, the number of supersteps run and whether the job halted."""
    values: dict[int, Any]
    steps: int
    completed: bool
    aggregates: list[Any] = field(default_factory=list)
    dropped_messages: int = 0

    def write(self, output_path: str | Path, program: VertexProgram) -> Path:
        """Write the values in the engine's `id<TAB>value` format (one part)."""
        output = Path(output_path)
        output.mkdir(parents=True, exist_ok=True)
        path = output / "part-00000"
        with open(path, "w") as f:
            for vertex_id in sorted(self.values):
                f.write(f"{vertex_id}\t{program.format_value(self.values[vertex_id])}\n")
        return path


def oracle_run(graph: OracleGraph, program: VertexProgram, max_steps: int = 10_000) -> OracleResult:
    """
    Execute `program` on `graph` superstep by superstep.

    Messages reach a vertex in ascending sender-id order; with a combiner
    they are folded into one payload first, as the engine does.

    Args:
        graph: In-memory graph
        program: Vertex program (fresh instance)
        max_steps: Superstep cap; hitting it returns completed=False

    Returns:
        OracleResult with one value per vertex
    """
    dtype = program.layout.adjacency_dtype
    ids = sorted(graph.neighbors)
    adjacency = {v: graph.adjacency(v, dtype) for v in ids}
    values = {v: program.initial_value(v) for v in ids}
    active = {v: True for v in ids}
    inbox: dict[int, list[Any]] = {}
    aggregated = None
    aggregates = []
    dropped = 0

    step = 0
    while step < max_steps:
        step += 1
        outbox: dict[int, list[tuple[int, Any]]] = defaultdict(list)
        contributions = []
        sender = [0]

        def send(target: int, payload: Any) -> None:
            outbox[target].append((sender[0], payload))

        ctx = SuperstepContext(
            superstep=step,
            num_vertices=len(ids),
            num_workers=1,
            aggregated=aggregated,
            _send=send,
            _contribute=contributions.append,
        )

        any_active = False
        for vertex_id in ids:
            messages = inbox.get(vertex_id, [])
            if not active[vertex_id] and not messages:
                continue
            if messages and program.has_combiner:
                messages = [program.fold(messages)]
            sender[0] = vertex_id
            vertex = VertexState(vertex_id, values[vertex_id], True, len(graph.neighbors[vertex_id]))
            program.compute(vertex, adjacency[vertex_id], messages, ctx)
            values[vertex_id] = vertex.value
            active[vertex_id] = vertex.active
            any_active |= vertex.active

        inbox = {}
        for target, items in outbox.items():
            if target not in values:
                dropped += len(items)
                continue
            items.sort(key=lambda item: item[0])
            inbox[target] = [payload for _, payload in items]

        if program.has_aggregator:
            aggregated = None
            for value in contributions:
                aggregated = value if aggregated is None else program.merge_aggregates(aggregated, value)
            aggregates.append(aggregated)

        if not any_active and ctx.messages_sent == 0:
            return OracleResult(values, step, True, aggregates, dropped)

    logger.warning(f"Oracle stopped at the superstep cap ({max_steps})")
    return OracleResult(values, step, False, aggregates, dropped)

