"""
Tests for the in-memory reference runner, cross-checked against the
closed-form and brute-force references.
"""

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from src.algorithms import Echo, HashMin, PageRank, SSSP
from src.oracle.engine import OracleGraph, oracle_run
from src.oracle.reference import (
    connected_components,
    echo_digests,
    pagerank_power_iteration,
    shortest_paths,
)
from src.utils.errors import GraphLoadError, GraphParseError


def path_graph(length: int) -> OracleGraph:
    """0 - 1 - ... - length, listed in both directions."""
    neighbors = {v: [] for v in range(length + 1)}
    for v in range(length):
        neighbors[v].append(v + 1)
        neighbors[v + 1].append(v)
    return OracleGraph(neighbors)


def random_graph(seed: int, num_vertices: int, num_edges: int, undirected: bool, weighted: bool = False):
    rng = random.Random(seed)
    ids = sorted(rng.sample(range(10 * num_vertices), num_vertices))
    neighbors = {v: [] for v in ids}
    weights = {v: [] for v in ids} if weighted else None
    for _ in range(num_edges):
        a, b = rng.choice(ids), rng.choice(ids)
        if a == b or b in neighbors[a]:
            continue
        neighbors[a].append(b)
        w = float(rng.randint(1, 9))
        if weighted:
            weights[a].append(w)
        if undirected:
            neighbors[b].append(a)
            if weighted:
                weights[b].append(w)
    return OracleGraph(neighbors, weights)


graph_seeds = st.integers(min_value=0, max_value=10_000)


class TestOracleGraph:
    """Test suite for OracleGraph.from_text."""

    def test_reads_text(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# comment\n1\t2 2 3\n2\t0\n\n3\t1 1\n")
        graph = OracleGraph.from_text(path)
        assert graph.neighbors == {1: [2, 3], 2: [], 3: [1]}
        assert graph.num_vertices == 3
        assert graph.num_edges == 3
        assert not graph.weighted

    def test_weighted(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("1\t1 2 0.5\n2\t0\n")
        graph = OracleGraph.from_text(path, weighted=True)
        assert graph.weights == {1: [0.5], 2: []}

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("1\t0\n1\t0\n")
        with pytest.raises(GraphLoadError):
            OracleGraph.from_text(path)

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("1\t0\n2\t3 1\n")
        with pytest.raises(GraphParseError) as excinfo:
            OracleGraph.from_text(path)
        assert excinfo.value.line_number == 2


class TestOracleRun:
    """Test suite for oracle_run."""

    def test_pagerank_on_a_cycle_stays_uniform(self):
        graph = OracleGraph({0: [1], 1: [2], 2: [0]})
        result = oracle_run(graph, PageRank(steps=30))
        assert result.completed
        assert result.steps == 30
        for value in result.values.values():
            assert value == pytest.approx(1 / 3)
        assert result.aggregates[-1] == pytest.approx(1.0)

    def test_bfs_on_a_path_takes_length_plus_one_steps(self):
        graph = OracleGraph({v: [v + 1] for v in range(6)} | {6: []})
        result = oracle_run(graph, SSSP(source=0))
        assert result.values == {v: float(v) for v in range(7)}
        assert result.steps == 7

    def test_bfs_on_an_undirected_path_needs_one_echo_step(self):
        """The far end answers its predecessor once more before everything halts."""
        result = oracle_run(path_graph(6), SSSP(source=0))
        assert result.values == {v: float(v) for v in range(7)}
        assert result.steps == 8

    def test_hashmin_two_components(self):
        graph = OracleGraph({1: [2], 2: [1], 5: [7], 7: [5], 9: []})
        result = oracle_run(graph, HashMin())
        assert result.values == {1: 1, 2: 1, 5: 5, 7: 5, 9: 9}

    def test_messages_to_missing_vertices_are_dropped(self):
        graph = OracleGraph({0: [1, 99], 1: []})
        result = oracle_run(graph, SSSP(source=0))
        assert result.values == {0: 0.0, 1: 1.0}
        assert result.dropped_messages == 1

    def test_superstep_cap(self):
        result = oracle_run(path_graph(10), SSSP(source=0), max_steps=3)
        assert not result.completed
        assert result.steps == 3
        assert result.values[2] == 2.0
        assert math.isinf(result.values[5])

    def test_write(self, tmp_path):
        result = oracle_run(OracleGraph({2: [], 1: []}), SSSP(source=1))
        path = result.write(tmp_path, SSSP())
        assert path.read_text() == "1\t0.0\n2\tinf\n"

    @settings(max_examples=25, deadline=None)
    @given(graph_seeds)
    def test_pagerank_matches_power_iteration(self, seed):
        graph = random_graph(seed, 30, 90, undirected=False)
        result = oracle_run(graph, PageRank(steps=10))
        expected = pagerank_power_iteration(graph, steps=10)
        for v, rank in expected.items():
            assert result.values[v] == pytest.approx(rank, rel=1e-12, abs=1e-15)

    @settings(max_examples=25, deadline=None)
    @given(graph_seeds)
    def test_hashmin_matches_union_find(self, seed):
        graph = random_graph(seed, 40, 30, undirected=True)
        assert oracle_run(graph, HashMin()).values == connected_components(graph)

    @settings(max_examples=25, deadline=None)
    @given(graph_seeds, st.booleans())
    def test_sssp_matches_dijkstra(self, seed, weighted):
        graph = random_graph(seed, 30, 80, undirected=False, weighted=weighted)
        source = min(graph.neighbors)
        result = oracle_run(graph, SSSP(source=source, weighted=weighted))
        assert result.values == shortest_paths(graph, source, weighted)

    @settings(max_examples=15, deadline=None)
    @given(graph_seeds, st.integers(min_value=1, max_value=3))
    def test_echo_matches_in_neighbor_digests(self, seed, rounds):
        graph = random_graph(seed, 20, 50, undirected=False)
        result = oracle_run(graph, Echo(rounds=rounds))
        assert result.values == echo_digests(graph, rounds)
        assert result.steps == rounds + 1


class TestReferences:
    """Sanity checks of the references themselves."""

    def test_dangling_rank_leaks(self):
        graph = OracleGraph({0: [1], 1: []})
        ranks = pagerank_power_iteration(graph, steps=2)
        assert ranks == {0: pytest.approx(0.075), 1: pytest.approx(0.075 + 0.85 * 0.5)}
        assert sum(ranks.values()) < 1.0

    def test_unreachable_is_infinite(self):
        graph = OracleGraph({0: [1], 1: [], 2: [0]})
        distances = shortest_paths(graph, 0)
        assert distances[1] == 1.0
        assert math.isinf(distances[2])

    def test_missing_source(self):
        distances = shortest_paths(OracleGraph({0: []}), 5)
        assert math.isinf(distances[0])
