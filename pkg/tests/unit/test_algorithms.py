"""
Tests for the built-in vertex programs, called directly with a recording context.
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.algorithms import ALGORITHMS, Echo, HashMin, PageRank, SSSP, create_program
from src.algorithms.echo import digest_ids
from src.algorithms.hashmin import NO_COMPONENT
from src.models.context import SuperstepContext
from src.models.records import Adjacency, VertexState
from src.utils.errors import ConfigError


def adjacency(neighbors, weights=None) -> Adjacency:
    if weights is None:
        records = np.zeros(len(neighbors), dtype=[("neighbor", "<u8")])
    else:
        records = np.zeros(len(neighbors), dtype=[("neighbor", "<u8"), ("weight", "<f8")])
        records["weight"] = weights
    records["neighbor"] = neighbors
    return Adjacency(records)


class RecordingContext:
    """Builds a SuperstepContext whose sends and contributions land in lists."""

    def __init__(self, superstep, num_vertices=4, aggregated=None):
        self.sent = []
        self.contributed = []
        self.ctx = SuperstepContext(
            superstep=superstep,
            num_vertices=num_vertices,
            num_workers=1,
            aggregated=aggregated,
            _send=lambda target, payload: self.sent.append((target, payload)),
            _contribute=self.contributed.append,
        )


class TestPageRank:
    """Test suite for PageRank."""

    @pytest.fixture
    def program(self):
        return PageRank(steps=3)

    def test_first_step_spreads_uniform_rank(self, program):
        rec = RecordingContext(1, num_vertices=4)
        vertex = VertexState(0, 0.0, True, 2)
        program.compute(vertex, adjacency([1, 2]), [], rec.ctx)
        assert vertex.value == 0.25
        assert rec.sent == [(1, 0.125), (2, 0.125)]
        assert rec.contributed == [0.25]
        assert vertex.active

    def test_update_rule(self, program):
        rec = RecordingContext(2, num_vertices=4)
        vertex = VertexState(0, 0.25, True, 1)
        program.compute(vertex, adjacency([3]), [0.1, 0.2], rec.ctx)
        assert vertex.value == pytest.approx(0.15 / 4 + 0.85 * 0.3)
        assert rec.ctx.messages_sent == 1

    def test_last_step_halts_without_sending(self, program):
        rec = RecordingContext(3)
        vertex = VertexState(0, 0.25, True, 1)
        program.compute(vertex, adjacency([3]), [0.2], rec.ctx)
        assert rec.sent == []
        assert not vertex.active

    def test_dangling_vertex_sends_nothing(self, program):
        rec = RecordingContext(1)
        program.compute(VertexState(0, 0.0, True, 0), adjacency([]), [], rec.ctx)
        assert rec.sent == []

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError):
            PageRank(steps=0)

    @given(st.lists(st.floats(min_value=0, max_value=1), min_size=1, max_size=30))
    def test_vectorized_fold_matches_combine(self, payloads):
        program = PageRank()
        slots = np.full(2, program.identity, dtype=program.message_dtype)
        program.fold_into(slots, np.zeros(len(payloads), dtype=np.intp), np.array(payloads))
        assert slots[0] == pytest.approx(program.fold(payloads))
        assert slots[1] == program.identity


class TestHashMin:
    """Test suite for HashMin."""

    @pytest.fixture
    def program(self):
        return HashMin()

    def test_initial_label_is_the_given_id(self, program):
        assert program.initial_value(42) == 42

    def test_first_step_announces_label(self, program):
        rec = RecordingContext(1)
        vertex = VertexState(7, 3, True, 2)
        program.compute(vertex, adjacency([1, 9]), [], rec.ctx)
        assert rec.sent == [(1, 3), (9, 3)]
        assert not vertex.active

    def test_smaller_label_propagates(self, program):
        rec = RecordingContext(2)
        vertex = VertexState(7, 7, True, 1)
        program.compute(vertex, adjacency([9]), [5], rec.ctx)
        assert vertex.value == 5
        assert rec.sent == [(9, 5)]

    def test_larger_label_ignored(self, program):
        rec = RecordingContext(2)
        vertex = VertexState(7, 2, True, 1)
        program.compute(vertex, adjacency([9]), [5], rec.ctx)
        assert vertex.value == 2
        assert rec.sent == []
        assert not vertex.active

    @given(st.lists(st.integers(0, NO_COMPONENT - 1), min_size=1, max_size=20))
    def test_combiner_identity(self, labels):
        program = HashMin()
        assert program.fold(labels) == min(labels)
        assert program.combine(program.identity, labels[0]) == labels[0]


class TestSSSP:
    """Test suite for SSSP."""

    def test_source_starts_at_zero(self):
        program = SSSP(source=1)
        rec = RecordingContext(1)
        vertex = VertexState(1, program.initial_value(1), True, 2)
        program.compute(vertex, adjacency([2, 3]), [], rec.ctx)
        assert vertex.value == 0.0
        assert rec.sent == [(2, 1.0), (3, 1.0)]

    def test_other_vertices_stay_unreached(self):
        program = SSSP(source=1)
        rec = RecordingContext(1)
        vertex = VertexState(2, program.initial_value(2), True, 1)
        program.compute(vertex, adjacency([3]), [], rec.ctx)
        assert math.isinf(vertex.value)
        assert rec.sent == []
        assert program.format_value(vertex.value) == "inf"

    def test_weighted_relaxation(self):
        program = SSSP(source=0, weighted=True)
        rec = RecordingContext(2)
        vertex = VertexState(4, math.inf, False, 2)
        program.compute(vertex, adjacency([5, 6], [0.5, 2.0]), [3.0], rec.ctx)
        assert vertex.value == 3.0
        assert rec.sent == [(5, 3.5), (6, 5.0)]

    def test_no_improvement_no_messages(self):
        program = SSSP()
        rec = RecordingContext(3)
        vertex = VertexState(4, 1.0, False, 1)
        program.compute(vertex, adjacency([5]), [2.0], rec.ctx)
        assert rec.sent == []

    def test_negative_weights_rejected(self):
        program = SSSP(weighted=True)
        records = np.array([(1, -1.0)], dtype=[("neighbor", "<u8"), ("weight", "<f8")])
        with pytest.raises(ConfigError):
            program.check_edges(records)

    def test_weighted_needs_weights(self):
        program = SSSP(weighted=True)
        with pytest.raises(ConfigError):
            program.check_edges(np.array([(1,)], dtype=[("neighbor", "<u8")]))

    def test_negative_source_rejected(self):
        with pytest.raises(ConfigError):
            SSSP(source=-1)

    def test_source_is_an_id_parameter(self):
        program = SSSP(source=12)
        assert program.id_parameters() == {"source": 12}
        program.set_id_parameters({"source": 5})
        assert program.source == 5


class TestEcho:
    """Test suite for Echo."""

    def test_sends_own_id(self):
        program = Echo(rounds=2)
        rec = RecordingContext(1)
        vertex = VertexState(3, 0, True, 2)
        program.compute(vertex, adjacency([1, 2]), [], rec.ctx)
        assert rec.sent == [(1, 3), (2, 3)]
        assert vertex.active

    def test_folds_sorted_ids(self):
        program = Echo(rounds=1)
        rec = RecordingContext(2)
        vertex = VertexState(3, 0, True, 0)
        program.compute(vertex, adjacency([]), [9, 2, 5], rec.ctx)
        assert vertex.value == digest_ids(0, [2, 5, 9])
        assert not vertex.active

    def test_digest_ignores_arrival_order(self):
        assert digest_ids(0, [3, 1, 2]) == digest_ids(0, [1, 2, 3])
        assert digest_ids(0, [1, 2]) != digest_ids(0, [1, 3])

    def test_has_no_combiner(self):
        program = Echo()
        assert not program.has_combiner
        assert program.combiner is None
        with pytest.raises(NotImplementedError):
            program.combine(1, 2)


class TestCreateProgram:
    """Test suite for create_program."""

    def test_every_name_builds(self):
        for name in ALGORITHMS:
            assert create_program(name).name == name

    def test_parameters_forwarded(self):
        assert create_program("pagerank", steps=4).steps == 4
        assert create_program("sssp", source=9, weighted=True).weighted
        assert create_program("ECHO", rounds=3).rounds == 3

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            create_program("triangles")

    def test_aggregator_flags(self):
        assert PageRank().has_aggregator
        assert not HashMin().has_aggregator
