"""Built-in vertex programs, selectable by name."""

from .base import VertexProgram
from .echo import Echo
from .hashmin import HashMin
from .pagerank import PageRank
from .sssp import SSSP
from ..utils.errors import ConfigError

ALGORITHMS = {
    "pagerank": PageRank,
    "hashmin": HashMin,
    "sssp": SSSP,
    "echo": Echo,
}


def create_program(
    name: str,
    steps: int = 10,
    source: int = 0,
    weighted: bool = False,
    rounds: int = 1
) -> VertexProgram:
    """
    Instantiate a built-in program from CLI-style parameters.

    Args:
        name: pagerank, hashmin, sssp or echo
        steps: PageRank supersteps
        source: SSSP source id
        weighted: SSSP edge weights present
        rounds: Echo rounds

    Returns:
        Configured VertexProgram
    """
    key = name.lower()
    if key == "pagerank":
        return PageRank(steps=steps)
    if key == "hashmin":
        return HashMin()
    if key == "sssp":
        return SSSP(source=source, weighted=weighted)
    if key == "echo":
        return Echo(rounds=rounds)
    raise ConfigError(f"Unknown algorithm '{name}'. Choose from: {', '.join(ALGORITHMS)}")


__all__ = [
    "ALGORITHMS", "VertexProgram", "PageRank", "HashMin", "SSSP", "Echo", "create_program",
]
