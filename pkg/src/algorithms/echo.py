"""
Combiner-free echo program: vertices send their id to every neighbor.
"""

from typing import Any, Sequence

import numpy as np

from .base import VertexProgram
from ..models.context import SuperstepContext
from ..models.partition import mix64
from ..models.records import Adjacency, VertexState


def digest_ids(previous: int, ids: Sequence[int]) -> int:
    """Fold a sorted id list into a running 64-bit digest."""
    value = previous
    for vertex_id in sorted(ids):
        value = mix64(value ^ mix64(vertex_id))
    return value


class Echo(VertexProgram):
    """
    For `rounds` supersteps each vertex sends its id to all neighbors;
    received ids are folded, in sorted order, into the vertex value.
    """

    name = "echo"
    value_dtype = np.dtype("<u8")
    message_dtype = np.dtype("<u8")

    def __init__(self, rounds: int = 1):
        """
        Initialize echo.

        Args:
            rounds: Number of sending supersteps
        """
        if rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {rounds}")
        self.rounds = rounds
        super().__init__()

    def compute(
        self,
        vertex: VertexState,
        adjacency: Adjacency,
        messages: Sequence[Any],
        ctx: SuperstepContext
    ) -> None:
        if messages:
            vertex.value = digest_ids(vertex.value, messages)
        if ctx.superstep <= self.rounds:
            ctx.send_to_all(adjacency.neighbors, vertex.id)
        else:
            vertex.vote_to_halt()
