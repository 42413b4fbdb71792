"""
Tests for vertex partitioning and the recoded id formulas.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.config.settings import ExecutionMode
from src.models.partition import (
    MASK64,
    hash_partition,
    mix64,
    mix64_array,
    new_id,
    partition_array,
    position_of,
)

ids = st.integers(min_value=0, max_value=MASK64)
workers = st.integers(min_value=1, max_value=64)


class TestMix64:
    """Test suite for the 64-bit mixer."""

    def test_known_value(self):
        """mix64(0) is the first splitmix64 output for seed 0."""
        assert mix64(0) == 0xE220A8397B1DCDAF

    def test_stays_in_64_bits(self):
        assert 0 <= mix64(MASK64) <= MASK64

    @given(st.lists(ids, min_size=1, max_size=50))
    def test_array_matches_scalar(self, values):
        mixed = mix64_array(np.array(values, dtype=np.uint64))
        assert mixed.tolist() == [mix64(v) for v in values]


class TestHashPartition:
    """Test suite for hash_partition / partition_array."""

    def test_recoded_is_plain_modulo(self):
        assert hash_partition(5, 3, ExecutionMode.RECODED) == 2
        assert hash_partition(0, 3, ExecutionMode.RECODED) == 0
        assert hash_partition(11, 4, ExecutionMode.RECODED) == 3

    def test_normal_uses_mixer(self):
        assert hash_partition(0, 7) == mix64(0) % 7

    def test_single_worker_owns_everything(self):
        assert hash_partition(123456789, 1) == 0
        assert hash_partition(123456789, 1, ExecutionMode.RECODED) == 0

    def test_rejects_zero_workers(self):
        with pytest.raises(ValueError):
            hash_partition(1, 0)
        with pytest.raises(ValueError):
            partition_array(np.array([1], dtype=np.uint64), 0)

    @given(ids, workers)
    def test_result_in_range(self, vertex_id, n):
        assert 0 <= hash_partition(vertex_id, n) < n

    @given(st.lists(ids, max_size=50), workers, st.sampled_from(list(ExecutionMode)))
    def test_array_matches_scalar(self, values, n, mode):
        owners = partition_array(np.array(values, dtype=np.uint64), n, mode)
        assert owners.tolist() == [hash_partition(v, n, mode) for v in values]

    def test_spreads_consecutive_ids(self):
        """Sequential ids land on every worker."""
        owners = partition_array(np.arange(1000, dtype=np.uint64), 4)
        counts = np.bincount(owners.astype(np.int64), minlength=4)
        assert (counts > 150).all()


class TestRecodedIds:
    """Test suite for new_id / position_of."""

    def test_worked_example(self):
        """The vertex at position 1 of worker 2 (of 3) becomes vertex 5."""
        assert new_id(1, 2, 3) == 5
        assert position_of(5, 3) == 1
        assert hash_partition(5, 3, ExecutionMode.RECODED) == 2

    @given(st.integers(min_value=0, max_value=10**9), workers, st.data())
    def test_position_round_trip(self, position, n, data):
        rank = data.draw(st.integers(min_value=0, max_value=n - 1))
        vertex_id = new_id(position, rank, n)
        assert position_of(vertex_id, n) == position
        assert vertex_id % n == rank

    def test_dense_over_cluster(self):
        """Positions 0..3 on 3 workers cover ids 0..11 exactly once."""
        covered = sorted(new_id(pos, rank, 3) for rank in range(3) for pos in range(4))
        assert covered == list(range(12))
