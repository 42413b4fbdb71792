"""In-memory reference runner, closed-form references, and output comparison."""

from .compare import VerifyReport, compare_outputs, read_output, remap_output, values_match
from .engine import OracleGraph, OracleResult, oracle_run

__all__ = [
    "VerifyReport", "compare_outputs", "read_output", "remap_output", "values_match",
    "OracleGraph", "OracleResult", "oracle_run",
]
