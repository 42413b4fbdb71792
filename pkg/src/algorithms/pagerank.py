"""
PageRank with a sum combiner and a rank-sum aggregator.
"""

from typing import Any, Sequence

import numpy as np

from .base import VertexProgram
from ..models.context import SuperstepContext
from ..models.records import Adjacency, VertexState


class PageRank(VertexProgram):
    """
    a(v) = 1/|V| in superstep 1, then 0.15/|V| + 0.85 * sum(msgs).

    Runs a fixed number of supersteps. Dangling vertices send nothing, so
    their rank leaks out of the total.
    """

    name = "pagerank"
    value_dtype = np.dtype("<f8")
    message_dtype = np.dtype("<f8")

    identity = 0.0
    combiner_ufunc = np.add
    aggregate_identity = 0.0

    def __init__(self, steps: int = 10):
        """
        Initialize PageRank.

        Args:
            steps: Number of supersteps to run
        """
        if steps < 1:
            raise ValueError(f"steps must be >= 1, got {steps}")
        self.steps = steps
        super().__init__()

    def compute(
        self,
        vertex: VertexState,
        adjacency: Adjacency,
        messages: Sequence[Any],
        ctx: SuperstepContext
    ) -> None:
        if ctx.superstep == 1:
            vertex.value = 1.0 / ctx.num_vertices
        else:
            vertex.value = 0.15 / ctx.num_vertices + 0.85 * sum(messages)

        ctx.aggregate(vertex.value)

        if ctx.superstep < self.steps:
            if vertex.degree > 0:
                ctx.send_to_all(adjacency.neighbors, vertex.value / vertex.degree)
        else:
            vertex.vote_to_halt()

    def combine(self, a: float, b: float) -> float:
        return a + b

    def merge_aggregates(self, a: float, b: float) -> float:
        return a + b

    def format_value(self, value: float) -> str:
        return repr(float(value))
