"""
Single-source shortest paths (breadth-first search when unweighted).
"""

import math
from typing import Any, Sequence

import numpy as np

from .base import VertexProgram
from ..models.context import SuperstepContext
from ..models.records import Adjacency, VertexState
from ..utils.errors import ConfigError

INFINITY = math.inf


class SSSP(VertexProgram):
    """
    Relax edges from the source; a vertex acts only when its distance drops.

    Unweighted graphs use weight 1 for every edge.
    """

    name = "sssp"
    value_dtype = np.dtype("<f8")
    message_dtype = np.dtype("<f8")

    identity = INFINITY
    combiner_ufunc = np.minimum

    def __init__(self, source: int = 0, weighted: bool = False):
        """
        Initialize SSSP.

        Args:
            source: Source vertex id
            weighted: Whether adjacency lists carry edge weights
        """
        if source < 0:
            raise ConfigError(f"source must be a non-negative vertex id, got {source}")
        self.source = source
        self.weighted = weighted
        super().__init__()

    def initial_value(self, vertex_id: int) -> float:
        return INFINITY

    def compute(
        self,
        vertex: VertexState,
        adjacency: Adjacency,
        messages: Sequence[Any],
        ctx: SuperstepContext
    ) -> None:
        if ctx.superstep == 1:
            if vertex.id == self.source:
                vertex.value = 0.0
                self._relax(vertex, adjacency, ctx)
            else:
                vertex.value = INFINITY
        elif messages:
            best = min(messages)
            if best < vertex.value:
                vertex.value = best
                self._relax(vertex, adjacency, ctx)
        vertex.vote_to_halt()

    def _relax(self, vertex: VertexState, adjacency: Adjacency, ctx: SuperstepContext) -> None:
        weights = adjacency.weights if self.weighted else None
        if weights is None:
            ctx.send_to_all(adjacency.neighbors, vertex.value + 1.0)
            return
        for neighbor, weight in zip(adjacency.neighbors, weights):
            ctx.send_message(neighbor, vertex.value + weight)

    def combine(self, a: float, b: float) -> float:
        return a if a < b else b

    def id_parameters(self) -> dict[str, int]:
        return {"source": self.source}

    def check_edges(self, adjacency: np.ndarray) -> None:
        if not self.weighted or not len(adjacency):
            return
        if "weight" not in (adjacency.dtype.names or ()):
            raise ConfigError("weighted SSSP needs a graph with edge weights")
        if (adjacency["weight"] < 0).any():
            raise ConfigError("SSSP requires non-negative edge weights")

    def format_value(self, value: float) -> str:
        if math.isinf(value):
            return "inf"
        return repr(float(value))
