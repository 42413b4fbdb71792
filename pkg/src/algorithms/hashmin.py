"""
Hash-Min connected components.
"""

from typing import Any, Sequence

import numpy as np

from .base import VertexProgram
from ..models.context import SuperstepContext
from ..models.records import Adjacency, VertexState

NO_COMPONENT = (1 << 64) - 1


class HashMin(VertexProgram):
    """
    Propagate the smallest vertex id through each connected component.

    Expects an undirected graph (every edge listed in both adjacency lists).
    Labels start from initial_value(), which receives the original id, so
    components are named by their smallest original id in both modes.
    """

    name = "hashmin"
    value_dtype = np.dtype("<u8")
    message_dtype = np.dtype("<u8")
    undirected = True

    identity = NO_COMPONENT
    combiner_ufunc = np.minimum

    def initial_value(self, vertex_id: int) -> int:
        return vertex_id

    def compute(
        self,
        vertex: VertexState,
        adjacency: Adjacency,
        messages: Sequence[Any],
        ctx: SuperstepContext
    ) -> None:
        if ctx.superstep == 1:
            ctx.send_to_all(adjacency.neighbors, vertex.value)
        elif messages:
            smallest = min(messages)
            if smallest < vertex.value:
                vertex.value = smallest
                ctx.send_to_all(adjacency.neighbors, smallest)
        vertex.vote_to_halt()

    def combine(self, a: int, b: int) -> int:
        return a if a < b else b
