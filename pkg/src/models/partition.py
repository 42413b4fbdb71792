"""
Vertex-to-worker partitioning and the recoded id <-> position formulas.
"""

import numpy as np

from ..config.settings import ExecutionMode

MASK64 = (1 << 64) - 1

# splitmix64 increment and finalizer constants
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_C1 = 0xBF58476D1CE4E5B9
MIX_C2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """
    Fixed 64-bit integer mixer (splitmix64 step).

    mix64(0) == 0xE220A8397B1DCDAF, the first splitmix64 output for seed 0.
    """
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_C1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_C2) & MASK64
    return z ^ (z >> 31)


def mix64_array(ids: np.ndarray) -> np.ndarray:
    """Vectorized mix64 over an unsigned 64-bit array."""
    z = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_C1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_C2)
    return z ^ (z >> np.uint64(31))


def hash_partition(
    vertex_id: int,
    num_workers: int,
    mode: ExecutionMode = ExecutionMode.NORMAL
) -> int:
    """
    Worker index owning a vertex.

    Args:
        vertex_id: Vertex id (old id in normal mode, new id in recoded mode)
        num_workers: |W| >= 1
        mode: normal (mixed hash) or recoded (plain modulo)

    Returns:
        Worker index in [0, num_workers)
    """
    if num_workers < 1:
        raise ValueError(f"num_workers must be >= 1, got {num_workers}")
    if mode == ExecutionMode.RECODED:
        return vertex_id % num_workers
    return mix64(vertex_id) % num_workers


def partition_array(
    ids: np.ndarray,
    num_workers: int,
    mode: ExecutionMode = ExecutionMode.NORMAL
) -> np.ndarray:
    """Vectorized hash_partition."""
    if num_workers < 1:
        raise ValueError(f"num_workers must be >= 1, got {num_workers}")
    ids = np.asarray(ids, dtype=np.uint64)
    if mode == ExecutionMode.RECODED:
        return ids % np.uint64(num_workers)
    return mix64_array(ids) % np.uint64(num_workers)


def new_id(position: int, rank: int, num_workers: int) -> int:
    """Recoded id of the vertex at `position` of worker `rank`'s state array."""
    return num_workers * position + rank


def position_of(vertex_id: int, num_workers: int) -> int:
    """Position of a recoded id inside its owner's state array."""
    return vertex_id // num_workers
