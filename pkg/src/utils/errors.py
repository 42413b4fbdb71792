"""
Exception hierarchy for the graph engine.
"""

from typing import Optional


class EngineError(Exception):
    """Base class for every error raised by the engine."""


class ConfigError(EngineError):
    """Invalid or inconsistent job configuration."""


class FramingError(EngineError):
    """Byte sequence is truncated or not a whole number of records/frames."""


class StreamCorruptionError(EngineError):
    """A stream ended before the requested items could be read."""


class UnsortedRunError(EngineError):
    """A merge input run is not sorted by target id."""

    def __init__(self, run: str, position: int, previous: int, current: int):
        self.run = run
        self.position = position
        super().__init__(
            f"Run {run} is not sorted at record {position}: "
            f"target {current} follows {previous}"
        )


class GraphParseError(EngineError):
    """Malformed line in a graph text file."""

    def __init__(self, line_number: int, reason: str, path: Optional[str] = None):
        self.line_number = line_number
        self.reason = reason
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line_number}: {reason}")


class GraphLoadError(EngineError):
    """Graph content is well-formed but unusable (duplicates, empty, asymmetric)."""


class ProtocolError(EngineError):
    """Superstep protocol violated (step isolation, foreign targets, bad tags)."""


class TransportError(EngineError):
    """Peer unreachable or network aborted."""


class TransportClosed(TransportError):
    """All incoming channels are closed; no more batches will arrive."""


class PreprocessingError(EngineError):
    """ID recoding could not complete."""


class ComputeError(EngineError):
    """A vertex program raised while computing a vertex."""

    def __init__(self, vertex_id: int, superstep: int, cause: BaseException):
        self.vertex_id = vertex_id
        self.superstep = superstep
        super().__init__(
            f"compute() failed for vertex {vertex_id} in superstep {superstep}: {cause!r}"
        )


class JobAborted(EngineError):
    """A sibling unit failed and this unit stopped waiting."""


class WorkerFailed(EngineError):
    """A worker process ended with an error (reported across the process boundary)."""

    def __init__(self, rank: int, kind: str, message: str):
        self.rank = rank
        self.kind = kind
        self.message = message
        super().__init__(f"worker {rank}: {kind}: {message}")

    def __reduce__(self):
        return (WorkerFailed, (self.rank, self.kind, self.message))
