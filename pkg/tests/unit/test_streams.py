"""
Tests for buffered streams and splittable streams.
"""

import threading

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from src.streams.buffered import ReadStream, WriteStream, read_all, write_records
from src.streams.counters import IoCounters, StreamStats
from src.streams.splittable import SplittableStream, list_parts, part_path
from src.utils.errors import FramingError, StreamCorruptionError

U8 = np.dtype("<u8")


def numbers(count: int) -> np.ndarray:
    return np.arange(count, dtype=U8)


class TestReadStream:
    """Test suite for ReadStream."""

    @pytest.fixture
    def stream_file(self, tmp_path):
        path = tmp_path / "values.bin"
        write_records(path, numbers(100))
        return path

    def test_reads_in_order(self, stream_file):
        with ReadStream(stream_file, U8, buffer_size=64) as stream:
            assert stream.read_items(3).tolist() == [0, 1, 2]
            assert stream.read_items(10).tolist() == list(range(3, 13))
            assert stream.position == 13

    def test_buffer_rounded_to_whole_records(self, stream_file):
        with ReadStream(stream_file, U8, buffer_size=20) as stream:
            assert stream.capacity == 16

    def test_refills_bounded_by_scan(self, stream_file):
        with ReadStream(stream_file, U8, buffer_size=80) as stream:
            for _ in range(100):
                stream.read_items(1)
            assert stream.refills == 10
            assert stream.bytes_read == 800
            assert stream.at_end()

    def test_skip_inside_buffer_touches_no_file(self, stream_file):
        with ReadStream(stream_file, U8, buffer_size=80) as stream:
            stream.read_items(1)
            stream.skip(5)
            assert stream.refills == 1
            assert stream.read_items(1).tolist() == [6]

    def test_skip_beyond_buffer_jumps(self, stream_file):
        with ReadStream(stream_file, U8, buffer_size=80) as stream:
            stream.read_items(1)
            stream.skip(50)
            assert stream.read_items(2).tolist() == [51, 52]
            assert stream.seeks == 1
            assert stream.bytes_read < 800

    def test_skip_to_end(self, stream_file):
        with ReadStream(stream_file, U8, buffer_size=64) as stream:
            stream.skip(100)
            assert stream.at_end()
            assert stream.read_items(0).tolist() == []

    def test_read_past_end_raises(self, stream_file):
        with ReadStream(stream_file, U8, buffer_size=64) as stream:
            stream.skip(98)
            with pytest.raises(StreamCorruptionError):
                stream.read_items(3)

    def test_negative_counts_rejected(self, stream_file):
        with ReadStream(stream_file, U8) as stream:
            with pytest.raises(ValueError):
                stream.read_items(-1)
            with pytest.raises(ValueError):
                stream.skip(-1)

    def test_misaligned_file_rejected(self, tmp_path):
        path = tmp_path / "odd.bin"
        path.write_bytes(b"\x00" * 13)
        with pytest.raises(FramingError):
            ReadStream(path, U8)

    def test_counters_shared(self, stream_file):
        counters = IoCounters()
        read_all(stream_file, U8, 64, counters)
        read_all(stream_file, U8, 64, counters)
        assert counters.bytes_read == 1600
        assert counters.refills == 26

    @settings(max_examples=40, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(
        st.lists(st.tuples(st.booleans(), st.integers(min_value=0, max_value=12)), max_size=30),
        st.integers(min_value=8, max_value=96),
    )
    def test_reads_and_skips_agree_with_slicing(self, stream_file, operations, buffer_size):
        """Any mix of reads and skips sees exactly the items a list slice would."""
        position = 0
        with ReadStream(stream_file, U8, buffer_size=buffer_size) as stream:
            for is_read, count in operations:
                count = min(count, 100 - position)
                if is_read:
                    assert stream.read_items(count).tolist() == list(range(position, position + count))
                else:
                    stream.skip(count)
                position += count
            assert stream.bytes_read <= 800


class TestWriteStream:
    """Test suite for WriteStream."""

    def test_flushes_only_when_full(self, tmp_path):
        path = tmp_path / "out.bin"
        stream = WriteStream(path, buffer_size=32)
        stream.write(b"a" * 20)
        assert stream.flushes == 0
        assert path.stat().st_size == 0
        stream.write(b"b" * 20)
        assert stream.flushes == 1
        stream.close()
        assert path.read_bytes() == b"a" * 20 + b"b" * 20
        assert stream.flushes == 2

    def test_append_mode(self, tmp_path):
        path = tmp_path / "out.bin"
        write_records(path, numbers(2))
        with WriteStream(path, append=True) as stream:
            stream.write_items(numbers(1))
        assert read_all(path, U8).tolist() == [0, 1, 0]

    def test_close_twice(self, tmp_path):
        stream = WriteStream(tmp_path / "out.bin")
        stream.close()
        stream.close()
        assert stream.closed

    def test_read_all_empty(self, tmp_path):
        path = tmp_path / "empty.bin"
        write_records(path, numbers(0))
        assert len(read_all(path, U8)) == 0


class TestStreamStats:
    """Test suite for StreamStats."""

    def test_roles_created_on_use(self):
        stats = StreamStats()
        stats["SE"].add(bytes_read=10)
        stats["SE"].add(bytes_read=5, refills=1)
        snapshot = stats.snapshot()
        assert snapshot["SE"]["bytes_read"] == 15
        assert snapshot["SE"]["refills"] == 1

    def test_delta(self):
        before = {"SE": {"bytes_read": 10}}
        after = {"SE": {"bytes_read": 25}, "OMS": {"bytes_written": 4}}
        assert StreamStats.delta(after, before) == {
            "SE": {"bytes_read": 15},
            "OMS": {"bytes_written": 4},
        }


class TestSplittableStream:
    """Test suite for SplittableStream."""

    @pytest.fixture
    def stream(self, tmp_path):
        return SplittableStream(tmp_path / "oms", split_size=32, buffer_size=16)

    def test_splits_at_bound(self, stream):
        for i in range(9):
            stream.append(i.to_bytes(8, "little"))
        # 4 items fill a 32-byte file
        assert stream.no_w == 2
        assert not stream.exhausted
        stream.finalize()
        assert stream.no_w == 3
        sizes = [p.stat().st_size for p in list_parts(stream.directory)]
        assert sizes == [32, 32, 8]

    def test_fetch_order_and_exhaustion(self, stream):
        for i in range(5):
            stream.append(i.to_bytes(8, "little"))
        first = stream.fetch_next()
        assert first == part_path(stream.directory, 1)
        assert read_all(first, U8).tolist() == [0, 1, 2, 3]
        assert stream.fetch_next() is None
        stream.finalize()
        assert stream.has_ready()
        assert read_all(stream.fetch_next(), U8).tolist() == [4]
        assert stream.exhausted

    def test_oversized_item_gets_own_file(self, stream):
        stream.append(b"x" * 8)
        stream.append(b"y" * 40)
        stream.append(b"z" * 8)
        stream.finalize()
        sizes = [p.stat().st_size for p in list_parts(stream.directory)]
        assert sizes == [8, 40, 8]

    def test_append_many_splits_on_item_boundaries(self, stream):
        stream.append_many(numbers(10).tobytes(), 8)
        stream.finalize()
        parts = stream.fetch_all_ready()
        assert [len(read_all(p, U8)) for p in parts] == [4, 4, 2]
        assert np.concatenate([read_all(p, U8) for p in parts]).tolist() == list(range(10))
        assert stream.items_appended == 10
        assert stream.bytes_appended == 80

    def test_append_many_rejects_partial_items(self, stream):
        with pytest.raises(ValueError):
            stream.append_many(b"\x00" * 12, 8)

    def test_empty_stream_is_exhausted_once_finalized(self, stream):
        assert not stream.exhausted
        stream.finalize()
        assert stream.exhausted
        assert stream.fetch_all_ready() == []

    def test_remove(self, stream):
        stream.append(b"\x00" * 8)
        stream.remove()
        assert not stream.directory.exists()

    def test_concurrent_fetcher_sees_every_item(self, tmp_path):
        """A fetcher thread draining while the producer appends loses nothing."""
        condition = threading.Condition()
        stream = SplittableStream(tmp_path / "oms", 64, 16, condition=condition)
        fetched: list[int] = []

        def fetch() -> None:
            while True:
                with condition:
                    while not stream.has_ready() and not stream.exhausted:
                        condition.wait(0.05)
                if stream.exhausted:
                    return
                path = stream.fetch_next()
                if path is not None:
                    fetched.extend(read_all(path, U8).tolist())

        fetcher = threading.Thread(target=fetch)
        fetcher.start()
        for i in range(500):
            stream.append(i.to_bytes(8, "little"))
        stream.finalize()
        fetcher.join(timeout=10)
        assert fetched == list(range(500))
