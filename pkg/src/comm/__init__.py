"""Worker-to-worker transport: batches, FIFO channels, allreduce and barrier."""

from .batch import FRAME_HEADER, Batch, BatchKind
from .simulated import SimulatedNetwork, SimulatedTransport
from .socket_transport import SocketTransport
from .transport import COORDINATOR, Transport

__all__ = [
    "FRAME_HEADER", "Batch", "BatchKind",
    "SimulatedNetwork", "SimulatedTransport", "SocketTransport",
    "COORDINATOR", "Transport",
]
