"""
Worker processes talking over local TCP sockets.
"""

import socket

import pytest

from src.cluster import put_graph, recode_graph, run_job
from src.config.settings import ExecutionMode, TransportKind, build_settings
from src.oracle.compare import compare_outputs, read_output
from src.utils.errors import WorkerFailed

pytestmark = [pytest.mark.integration, pytest.mark.slow]

RING = "".join(f"{v}\t2 {(v + 1) % 12} {(v + 11) % 12}\n" for v in range(12))


def free_base_port(count: int) -> int:
    """A base port with `count` consecutive ports free right now."""
    for _ in range(50):
        with socket.socket() as sock:
            sock.bind(("127.0.0.1", 0))
            base = sock.getsockname()[1]
        if base + count >= 65535:
            continue
        held = []
        try:
            for offset in range(count):
                s = socket.socket()
                held.append(s)
                s.bind(("127.0.0.1", base + offset))
            return base
        except OSError:
            continue
        finally:
            for s in held:
                s.close()
    pytest.skip("no block of free ports")


class TestSocketCluster:
    """Test suite for jobs over the socket transport."""

    @pytest.fixture
    def store(self, tmp_path):
        graph = tmp_path / "ring.txt"
        graph.write_text(RING)
        put_graph(graph, tmp_path / "store")
        return tmp_path

    def settings(self, tmp_path, out="out", **overrides):
        return build_settings(
            store_path=str(tmp_path / "store"),
            output_path=str(tmp_path / out),
            num_workers=3,
            transport="sockets",
            base_port=free_base_port(3),
            stream_buffer_b=256,
            split_size_B=1024,
            merge_fanin_k=3,
            log_level="WARNING",
            **overrides,
        )

    def test_hashmin_matches_simulated_run(self, store):
        sockets = run_job(self.settings(store, "sockets"), "hashmin")
        simulated_settings = self.settings(store, "sim").model_copy(update={"transport": TransportKind.SIMULATED})
        simulated = run_job(simulated_settings, "hashmin")
        values = read_output(sockets.output_path)
        assert set(values.values()) == {"0"}
        assert compare_outputs(values, read_output(simulated.output_path)).ok

    def test_recoded_pagerank(self, store):
        settings = self.settings(store, steps=4)
        recode_graph(settings)
        job = run_job(settings.model_copy(update={"mode": ExecutionMode.RECODED}), "pagerank")
        values = read_output(job.output_path)
        assert len(values) == 12
        assert all(abs(float(v) - 1 / 12) < 1e-12 for v in values.values())

    def test_worker_failure_is_reported(self, store):
        with pytest.raises(WorkerFailed, match="ConfigError"):
            run_job(self.settings(store, mode="recoded"), "sssp")
