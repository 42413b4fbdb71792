"""
Tests for record models and their binary layouts.
"""

import numpy as np
import pytest

from src.models.records import (
    Adjacency,
    AdjacencyItem,
    MessageEnvelope,
    RecordLayout,
    VertexState,
    decode_records,
    envelope_dtype,
)
from src.utils.errors import FramingError


class TestRecordLayout:
    """Test suite for RecordLayout."""

    @pytest.fixture
    def layout(self):
        return RecordLayout("<f8", "<f8", weighted=False)

    @pytest.fixture
    def weighted_layout(self):
        return RecordLayout("<u8", "<u8", weighted=True)

    def test_record_sizes(self, layout, weighted_layout):
        assert layout.state_dtype.itemsize == 8 + 8 + 1 + 8
        assert layout.recoded_state_dtype.itemsize == layout.state_dtype.itemsize + 8
        assert layout.adjacency_dtype.itemsize == 8
        assert weighted_layout.adjacency_dtype.itemsize == 16
        assert layout.envelope_dtype.itemsize == 16
        assert layout.largest_record == layout.recoded_state_dtype.itemsize

    def test_state_bytes_are_little_endian(self, layout):
        data = layout.serialize_state(VertexState(1, 0.5, True, 3))
        assert data[:8] == (1).to_bytes(8, "little")
        assert layout.deserialize_state(data) == VertexState(1, 0.5, True, 3)

    def test_halted_state(self, layout):
        state = VertexState(7, 2.0, False, 0)
        assert layout.deserialize_state(layout.serialize_state(state)).active is False

    def test_weighted_adjacency(self, weighted_layout):
        item = AdjacencyItem(neighbor=42, weight=1.5)
        assert weighted_layout.deserialize_adjacency(weighted_layout.serialize_adjacency(item)) == item

    def test_unweighted_adjacency_drops_weight(self, layout):
        data = layout.serialize_adjacency(AdjacencyItem(neighbor=9, weight=3.0))
        assert layout.deserialize_adjacency(data) == AdjacencyItem(neighbor=9)

    def test_pack_envelope_matches_numpy(self, layout):
        packed = layout.pack_envelope(12, 0.25)
        expected = np.array([(12, 0.25)], dtype=envelope_dtype("<f8")).tobytes()
        assert packed == expected
        assert layout.deserialize_envelope(packed) == MessageEnvelope(12, 0.25)

    def test_structured_payload_falls_back_to_numpy(self):
        layout = RecordLayout("<u8", [("old", "<u8"), ("new", "<u8")])
        packed = layout.pack_envelope(3, (10, 20))
        assert len(packed) == 24
        assert layout.deserialize_envelope(packed) == MessageEnvelope(3, (10, 20))

    def test_wrong_length_rejected(self, layout):
        with pytest.raises(FramingError):
            layout.deserialize_state(b"\x00" * 5)
        with pytest.raises(FramingError):
            layout.deserialize_envelope(b"\x00" * 17)


class TestDecodeRecords:
    """Test suite for decode_records."""

    def test_whole_records(self):
        dtype = envelope_dtype("<u8")
        data = np.array([(1, 2), (3, 4)], dtype=dtype).tobytes()
        records = decode_records(data, dtype)
        assert records["target"].tolist() == [1, 3]
        assert records["payload"].tolist() == [2, 4]

    def test_partial_record_rejected(self):
        with pytest.raises(FramingError):
            decode_records(b"\x00" * 15, envelope_dtype("<u8"))

    def test_empty(self):
        assert len(decode_records(b"", envelope_dtype("<u8"))) == 0


class TestAdjacency:
    """Test suite for the Adjacency sequence."""

    def test_weighted_view(self):
        records = np.array([(4, 0.5), (8, 1.5)], dtype=[("neighbor", "<u8"), ("weight", "<f8")])
        adjacency = Adjacency(records)
        assert len(adjacency) == 2
        assert adjacency.weighted
        assert adjacency.neighbors == [4, 8]
        assert adjacency.weights == [0.5, 1.5]
        assert list(adjacency) == [AdjacencyItem(4, 0.5), AdjacencyItem(8, 1.5)]

    def test_unweighted_view(self):
        adjacency = Adjacency(np.array([(1,), (2,), (3,)], dtype=[("neighbor", "<u8")]))
        assert not adjacency.weighted
        assert adjacency.weights is None
        assert adjacency[1:] == [AdjacencyItem(2), AdjacencyItem(3)]


class TestVertexState:
    """Test suite for VertexState."""

    def test_vote_to_halt(self):
        state = VertexState(1, 0.0)
        state.vote_to_halt()
        assert not state.active
        assert "halted" in str(state)
