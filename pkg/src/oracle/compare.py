"""
Result files and their comparison.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from ..utils.errors import EngineError

# Mismatches listed individually in a report
MAX_LISTED = 20


def read_output(path: str | Path) -> dict[int, str]:
    """
    Read `id<TAB>value` lines from a result directory (every part-* file)
    or from a single file.

    Raises:
        EngineError: Missing output, malformed line, or an id written twice
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.glob("part-*") if p.is_file())
    elif path.is_file():
        files = [path]
    else:
        raise EngineError(f"No output at {path}")

    values: dict[int, str] = {}
    for file in files:
        with open(file) as f:
            for number, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                id_part, sep, value = line.partition("\t")
                if not sep:
                    raise EngineError(f"{file}:{number}: expected id<TAB>value")
                vertex_id = int(id_part)
                if vertex_id in values:
                    raise EngineError(f"{file}:{number}: vertex {vertex_id} written twice")
                values[vertex_id] = value
    return values


def _number(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


def values_match(actual: str, expected: str, tolerance: float = 0.0) -> bool:
    """
    Exact text match, or numeric match within `tolerance` (absolute and relative).

    A NaN on either side never matches, not even another NaN.
    """
    a, b = _number(actual), _number(expected)
    if (a is not None and math.isnan(a)) or (b is not None and math.isnan(b)):
        return False
    if actual == expected:
        return True
    if a is None or b is None:
        return False
    if math.isinf(a) or math.isinf(b):
        return a == b
    return math.isclose(a, b, rel_tol=tolerance, abs_tol=tolerance)


@dataclass
class VerifyReport:
    """Outcome of joining two outputs by vertex id."""
    compared: int = 0
    mismatches: int = 0
    max_abs_diff: float = 0.0
    missing: list[int] = field(default_factory=list)
    extra: list[int] = field(default_factory=list)
    examples: list[tuple[int, Any, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mismatches == 0 and not self.missing and not self.extra

    def __str__(self) -> str:
        status = "MATCH" if self.ok else "MISMATCH"
        return (
            f"{status}: {self.compared} vertices compared, {self.mismatches} mismatches, "
            f"max |diff| {self.max_abs_diff:.3g}, {len(self.missing)} missing, "
            f"{len(self.extra)} extra"
        )


def compare_outputs(
    actual: dict[int, str],
    expected: dict[int, str],
    tolerance: float = 0.0,
    as_partition: bool = False
) -> VerifyReport:
    """
    Join two outputs by id.

    Args:
        actual: Values under test
        expected: Reference values
        tolerance: Numeric tolerance for float values
        as_partition: Compare the groupings induced by equal values instead
            of the values (component labels that differ only by naming)

    Returns:
        VerifyReport
    """
    report = VerifyReport()
    report.missing = sorted(set(expected) - set(actual))
    report.extra = sorted(set(actual) - set(expected))
    common = sorted(set(actual) & set(expected))
    report.compared = len(common)

    if as_partition:
        forward: dict[str, str] = {}
        backward: dict[str, str] = {}
        for vertex_id in common:
            a, e = actual[vertex_id], expected[vertex_id]
            if forward.setdefault(e, a) != a or backward.setdefault(a, e) != e:
                report.mismatches += 1
                if len(report.examples) < MAX_LISTED:
                    report.examples.append((vertex_id, a, e))
        return report

    for vertex_id in common:
        a, e = actual[vertex_id], expected[vertex_id]
        na, ne = _number(a), _number(e)
        if na is not None and ne is not None and math.isfinite(na) and math.isfinite(ne):
            report.max_abs_diff = max(report.max_abs_diff, abs(na - ne))
        if not values_match(a, e, tolerance):
            report.mismatches += 1
            if len(report.examples) < MAX_LISTED:
                report.examples.append((vertex_id, a, e))
    return report


def remap_output(values: dict[int, str], mapping: dict[int, int]) -> dict[int, str]:
    """Translate output ids through an {old: new} (or inverse) map."""
    return {mapping.get(vertex_id, vertex_id): value for vertex_id, value in values.items()}
