"""
Base class for vertex programs.
"""

from abc import ABC, abstractmethod
from functools import reduce
from typing import Any, Optional, Sequence

import numpy as np

from ..models.context import SuperstepContext
from ..models.records import Adjacency, RecordLayout, VertexState
from ..streams.merge import Combiner
from ..utils.logger import get_logger

logger = get_logger()


class VertexProgram(ABC):
    """
    Abstract base class for vertex-centric programs.

    Subclasses declare fixed-size dtypes for vertex values and messages, and
    implement compute(). A program that overrides combine() must also set
    `identity` (the element e0 with combine(e0, m) == m); it may set
    `combiner_ufunc` so folds into arrays run vectorized.
    """

    name: str = "base"
    value_dtype: np.dtype = np.dtype("<f8")
    message_dtype: np.dtype = np.dtype("<f8")
    weighted: bool = False
    undirected: bool = False

    identity: Any = None
    combiner_ufunc: Optional[np.ufunc] = None

    aggregate_identity: Any = None

    def __init__(self):
        """Initialize program."""
        self._layout: Optional[RecordLayout] = None
        logger.debug(f"Vertex program '{self.name}' initialized")

    @property
    def layout(self) -> RecordLayout:
        """Binary layout of this program's records."""
        if self._layout is None:
            self._layout = RecordLayout(self.value_dtype, self.message_dtype, self.weighted)
        return self._layout

    def initial_value(self, vertex_id: int) -> Any:
        """Value stored in the state array right after loading."""
        return np.zeros((), dtype=self.value_dtype).item()

    @abstractmethod
    def compute(
        self,
        vertex: VertexState,
        adjacency: Adjacency,
        messages: Sequence[Any],
        ctx: SuperstepContext
    ) -> None:
        """
        Process one vertex in one superstep.

        Args:
            vertex: Mutable vertex state (value, active flag)
            adjacency: The vertex's adjacency list
            messages: Payloads received from the previous superstep
            ctx: Superstep context for sending and aggregating
        """
        pass

    # ---- combiner ----

    def combine(self, a: Any, b: Any) -> Any:
        """Associative, commutative fold of two payloads."""
        raise NotImplementedError(f"{self.name} declares no combiner")

    @property
    def has_combiner(self) -> bool:
        return type(self).combine is not VertexProgram.combine

    @property
    def combiner(self) -> Optional[Combiner]:
        """Combiner handed to merges, or None when the program declares none."""
        if not self.has_combiner:
            return None
        return Combiner(self.combine, self.combiner_ufunc)

    def fold(self, payloads: Sequence[Any]) -> Any:
        """Sequential fold of payloads starting from the identity element."""
        return reduce(self.combine, payloads, self.identity)

    def fold_into(self, slots: np.ndarray, positions: np.ndarray, payloads: np.ndarray) -> None:
        """
        Combine payloads[i] into slots[positions[i]] in place.

        Args:
            slots: Array of message payloads (A_r or A_s)
            positions: Slot index per payload
            payloads: Payload per message
        """
        if self.combiner_ufunc is not None:
            self.combiner_ufunc.at(slots, positions, payloads)
            return
        combine = self.combine
        for pos, payload in zip(positions.tolist(), payloads.tolist()):
            slots[pos] = combine(slots[pos].item(), payload)

    # ---- aggregator ----

    def merge_aggregates(self, a: Any, b: Any) -> Any:
        """Associative merge of aggregator contributions."""
        raise NotImplementedError(f"{self.name} declares no aggregator")

    @property
    def has_aggregator(self) -> bool:
        return type(self).merge_aggregates is not VertexProgram.merge_aggregates

    # ---- parameters and output ----

    def id_parameters(self) -> dict[str, int]:
        """Program parameters holding vertex ids (translated in recoded mode)."""
        return {}

    def set_id_parameters(self, mapping: dict[str, int]) -> None:
        """Replace id-valued parameters with translated ids."""
        for key, value in mapping.items():
            setattr(self, key, value)

    def check_edges(self, adjacency: np.ndarray) -> None:
        """Validate adjacency records at load time (raise ConfigError to reject)."""
        return None

    def format_value(self, value: Any) -> str:
        """Text form of a vertex value in result files."""
        return str(value)

    def describe(self) -> str:
        """One-line description for logs."""
        combiner = "combiner" if self.has_combiner else "no combiner"
        return f"{self.name} ({combiner})"
