"""
Tests for the graph text format and file portions.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from src.engine.graph_text import (
    byte_range,
    edge_fingerprint,
    iter_portion,
    line_number_at,
    parse_line,
)
from src.utils.errors import GraphParseError


class TestParseLine:
    """Test suite for parse_line."""

    def test_unweighted(self):
        assert parse_line("7\t3 1 2 9", False) == (7, [1, 2, 9], None)

    def test_weighted(self):
        assert parse_line("7\t2 1 0.5 2 1.5", True) == (7, [1, 2], [0.5, 1.5])

    def test_isolated_vertex(self):
        assert parse_line("4\t0", False) == (4, [], None)

    def test_weight_inference(self):
        assert parse_line("1\t1 2 3.0", None) == (1, [2], [3.0])
        assert parse_line("1\t2 2 3", None) == (1, [2, 3], None)

    @pytest.mark.parametrize("line,reason", [
        ("7 3 1 2 9", "TAB"),
        ("7\t", "degree"),
        ("x\t0", "vertex id"),
        ("7\t2 1", "needs 2"),
        ("7\t1 -3", "neighbor id"),
        ("7\t1 2 heavy", "weight"),
        ("18446744073709551616\t0", "64 bits"),
    ])
    def test_malformed(self, line, reason):
        weighted = "heavy" in line
        with pytest.raises(ValueError, match=reason):
            parse_line(line, weighted)


class TestPortions:
    """Test suite for iter_portion and byte_range."""

    @pytest.fixture
    def graph_file(self, tmp_path):
        path = tmp_path / "graph.txt"
        lines = [f"{v}\t2 {(v + 1) % 40} {(v + 7) % 40}" for v in range(40)]
        path.write_text("# header\n" + "\n".join(lines) + "\n")
        return path

    def test_whole_file(self, graph_file):
        vertices = list(iter_portion(graph_file))
        assert [v.id for v in vertices] == list(range(40))
        assert vertices[3].neighbors == [4, 10]
        assert vertices[3].degree == 2

    def test_byte_ranges_cover_file(self):
        ranges = [byte_range(1000, r, 3) for r in range(3)]
        assert ranges[0][0] == 0
        assert ranges[-1][1] == 1000
        assert all(a[1] == b[0] for a, b in zip(ranges, ranges[1:]))

    @settings(max_examples=20, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(st.integers(min_value=1, max_value=12))
    def test_portions_partition_lines(self, graph_file, num_workers):
        """Every line lands in exactly one portion."""
        seen = []
        for rank in range(num_workers):
            seen += [v.id for v in iter_portion(graph_file, rank, num_workers)]
        assert sorted(seen) == list(range(40))

    def test_error_carries_line_number(self, tmp_path):
        path = tmp_path / "graph.txt"
        path.write_text("1\t0\n\n2\t1\n")
        with pytest.raises(GraphParseError) as excinfo:
            list(iter_portion(path))
        assert excinfo.value.line_number == 3
        assert str(path) in str(excinfo.value)

    def test_line_number_at(self, tmp_path):
        path = tmp_path / "graph.txt"
        path.write_text("ab\ncd\nef\n")
        assert line_number_at(path, 0) == 1
        assert line_number_at(path, 6) == 3


class TestEdgeFingerprint:
    """Test suite for edge_fingerprint."""

    def test_symmetric_graph_matches_reverse(self):
        src = np.array([1, 2, 2, 3], dtype=np.uint64)
        dst = np.array([2, 1, 3, 2], dtype=np.uint64)
        assert edge_fingerprint(src, dst) == edge_fingerprint(dst, src)

    def test_one_way_edge_detected(self):
        src = np.array([1, 2, 2], dtype=np.uint64)
        dst = np.array([2, 1, 3], dtype=np.uint64)
        assert edge_fingerprint(src, dst) != edge_fingerprint(dst, src)

    def test_order_independent(self):
        src = np.array([1, 5, 9], dtype=np.uint64)
        dst = np.array([4, 2, 7], dtype=np.uint64)
        order = np.array([2, 0, 1])
        assert edge_fingerprint(src, dst) == edge_fingerprint(src[order], dst[order])

    def test_empty(self):
        empty = np.array([], dtype=np.uint64)
        assert edge_fingerprint(empty, empty) == 0
