"""
End-to-end jobs on the simulated network, checked against the in-memory oracle.

Buffers are kept tiny so every run splits OMS files, writes several IMS runs
per superstep and needs more than one merge pass.
"""

import random
from pathlib import Path
from unittest.mock import patch

import pytest

from src.cluster import make_program, put_graph, recode_graph, run_job
from src.config.settings import ExecutionMode, build_settings
from src.engine.state_array import StateArray
from src.engine.stats import check_overlap, check_pass_bounds, load_job_stats
from src.models.manifest import GraphManifest
from src.oracle.compare import compare_outputs, read_output
from src.oracle.engine import OracleGraph, oracle_run
from src.recode.digest import DigestArray
from src.recode.preprocess import MAP_FILE, RECODE_DIR, read_recode_map
from src.utils.errors import ConfigError, GraphLoadError, PreprocessingError

pytestmark = pytest.mark.integration

TOLERANCE = 1e-12


def write_graph(path: Path, neighbors: dict, weights: dict = None) -> Path:
    """Write adjacency lists in the engine's text format (ids in random order)."""
    order = list(neighbors)
    random.Random(len(order)).shuffle(order)
    lines = []
    for v in order:
        if weights is None:
            items = [str(u) for u in neighbors[v]]
        else:
            items = [f"{u} {w!r}" for u, w in zip(neighbors[v], weights[v])]
        lines.append(f"{v}\t{len(neighbors[v])}{' ' + ' '.join(items) if items else ''}")
    path.write_text("\n".join(lines) + "\n")
    return path


def sparse_graph(seed: int, num_vertices: int = 60, num_edges: int = 240,
                 undirected: bool = False, weighted: bool = False):
    """Random graph over sparse ids, with isolated and dangling vertices."""
    rng = random.Random(seed)
    ids = sorted(rng.sample(range(1, 50 * num_vertices), num_vertices))
    neighbors = {v: [] for v in ids}
    weights = {v: [] for v in ids} if weighted else None
    for _ in range(num_edges):
        a, b = rng.choice(ids), rng.choice(ids)
        if a == b or b in neighbors[a]:
            continue
        w = float(rng.randint(1, 20))
        neighbors[a].append(b)
        if weighted:
            weights[a].append(w)
        if undirected:
            neighbors[b].append(a)
            if weighted:
                weights[b].append(w)
    return neighbors, weights


def job_settings(tmp_path: Path, num_workers: int, **overrides):
    values = dict(
        store_path=str(tmp_path / "store"),
        output_path=str(tmp_path / "out"),
        num_workers=num_workers,
        transport="sim",
        stream_buffer_b=256,
        split_size_B=1024,
        merge_fanin_k=3,
        log_level="WARNING",
    )
    values.update(overrides)
    return build_settings(**values)


def expected_output(tmp_path: Path, settings, algorithm: str):
    """Oracle values for the stored graph, formatted like the engine's output."""
    manifest = GraphManifest.load(settings.store_path)
    graph = OracleGraph.from_text(manifest.graph_path(settings.store_path), manifest.weighted)
    program = make_program(settings, manifest, algorithm)
    result = oracle_run(graph, program, settings.max_supersteps)
    directory = tmp_path / f"oracle-{algorithm}"
    result.write(directory, program)
    return read_output(directory), result


def assert_matches_oracle(tmp_path: Path, settings, algorithm: str, tolerance: float = 0.0):
    job = run_job(settings, algorithm)
    expected, oracle = expected_output(tmp_path, settings, algorithm)
    report = compare_outputs(read_output(job.output_path), expected, tolerance)
    assert report.ok, f"{report}: {report.examples}"
    assert job.stats["supersteps"] == oracle.steps
    assert check_pass_bounds(job.stats) == []
    return job


class TestNormalMode:
    """Jobs in normal mode against the oracle."""

    @pytest.fixture
    def directed_store(self, tmp_path):
        neighbors, _ = sparse_graph(seed=11)
        # one edge to a vertex that does not exist
        first = min(neighbors)
        neighbors[first].append(10**9)
        put_graph(write_graph(tmp_path / "directed.txt", neighbors), tmp_path / "store")
        return tmp_path

    @pytest.fixture
    def undirected_store(self, tmp_path):
        neighbors, _ = sparse_graph(seed=23, num_edges=70, undirected=True)
        put_graph(write_graph(tmp_path / "undirected.txt", neighbors), tmp_path / "store")
        return tmp_path

    @pytest.fixture
    def weighted_store(self, tmp_path):
        neighbors, weights = sparse_graph(seed=5, weighted=True)
        put_graph(write_graph(tmp_path / "weighted.txt", neighbors, weights), tmp_path / "store",
                  weighted=True)
        return tmp_path

    @pytest.mark.parametrize("num_workers", [1, 3, 4])
    def test_pagerank(self, directed_store, num_workers):
        settings = job_settings(directed_store, num_workers, steps=8)
        assert_matches_oracle(directed_store, settings, "pagerank", TOLERANCE)

    @pytest.mark.parametrize("num_workers", [1, 3, 4])
    def test_hashmin(self, undirected_store, num_workers):
        settings = job_settings(undirected_store, num_workers)
        assert_matches_oracle(undirected_store, settings, "hashmin")

    @pytest.mark.parametrize("num_workers", [1, 3, 4])
    def test_sssp(self, directed_store, num_workers):
        neighbors = OracleGraph.from_text(directed_store / "store" / "graph.txt").neighbors
        source = min(v for v in neighbors if neighbors[v])
        settings = job_settings(directed_store, num_workers, source=source)
        assert_matches_oracle(directed_store, settings, "sssp")

    def test_weighted_sssp(self, weighted_store):
        neighbors = OracleGraph.from_text(weighted_store / "store" / "graph.txt", weighted=True).neighbors
        source = next(v for v in sorted(neighbors) if neighbors[v])
        settings = job_settings(weighted_store, 3, source=source)
        assert_matches_oracle(weighted_store, settings, "sssp")

    @pytest.mark.parametrize("num_workers", [1, 3])
    def test_echo_without_combiner(self, directed_store, num_workers):
        settings = job_settings(directed_store, num_workers, echo_rounds=2)
        assert_matches_oracle(directed_store, settings, "echo")

    def test_random_delays_do_not_change_results(self, directed_store):
        settings = job_settings(directed_store, 4, steps=5, sim_max_delay=0.002, seed=3)
        assert_matches_oracle(directed_store, settings, "pagerank", TOLERANCE)

    def test_large_fanin_merges_in_one_pass(self, undirected_store):
        settings = job_settings(undirected_store, 3, merge_fanin_k=1000)
        job = assert_matches_oracle(undirected_store, settings, "hashmin")
        for worker in job.stats["workers"]:
            assert all(step["merge_passes"] <= 1 for step in worker["steps"])

    def test_worker_stats_record_wall_time_and_transport(self, directed_store):
        job = run_job(job_settings(directed_store, 3, steps=6), "pagerank")
        for worker in job.stats["workers"]:
            assert worker["wall_seconds"] > 0
            assert worker["transport"]["bytes_sent"] > 0
            assert worker["transport"]["sent"]["DATA"] > 0
            busy = sum((s["compute_end"] or 0.0) - (s["compute_start"] or 0.0) for s in worker["steps"])
            assert busy < worker["wall_seconds"]
        assert check_overlap(job.stats)["busy_below_wall"]

    def test_recode_stats_record_wall_time(self, undirected_store):
        settings = job_settings(undirected_store, 3)
        recode_graph(settings)
        job = load_job_stats(Path(settings.store_path) / RECODE_DIR)
        assert all(worker["wall_seconds"] > 0 for worker in job["workers"])
        assert all(worker["transport"]["bytes_sent"] > 0 for worker in job["workers"])

    def test_output_files_and_stats(self, undirected_store):
        settings = job_settings(undirected_store, 3)
        job = run_job(settings, "hashmin")
        parts = sorted(p.name for p in job.output_path.glob("part-*"))
        assert parts == ["part-00000", "part-00001", "part-00002"]
        assert (job.output_path / "_stats" / "job.json").is_file()
        assert job.stats["num_vertices"] == GraphManifest.load(settings.store_path).num_vertices

    def test_rerun_replaces_output(self, undirected_store):
        settings = job_settings(undirected_store, 4)
        run_job(settings, "hashmin")
        smaller = job_settings(undirected_store, 2)
        job = run_job(smaller, "hashmin")
        assert len(list(job.output_path.glob("part-*"))) == 2


class TestRecodedMode:
    """Recoding, recoded-mode jobs and their agreement with normal mode."""

    @pytest.fixture
    def directed_store(self, tmp_path):
        neighbors, _ = sparse_graph(seed=41)
        put_graph(write_graph(tmp_path / "directed.txt", neighbors), tmp_path / "store")
        return tmp_path

    @pytest.fixture
    def undirected_store(self, tmp_path):
        neighbors, _ = sparse_graph(seed=42, num_edges=80, undirected=True)
        put_graph(write_graph(tmp_path / "undirected.txt", neighbors), tmp_path / "store")
        return tmp_path

    @pytest.mark.parametrize("num_workers", [1, 3, 4])
    def test_recode_assigns_dense_ids(self, undirected_store, num_workers):
        settings = job_settings(undirected_store, num_workers)
        manifest = recode_graph(settings)
        assert manifest.recode.num_workers == num_workers

        mapping = {}
        for rank in range(num_workers):
            part = read_recode_map(settings.worker_scratch(rank) / MAP_FILE)
            assert all(new % num_workers == rank for new in part.values())
            mapping.update(part)
        assert sorted(mapping) == sorted(OracleGraph.from_text(
            manifest.graph_path(settings.store_path)).neighbors)
        assert len(set(mapping.values())) == len(mapping)
        assert (Path(settings.store_path) / RECODE_DIR / "_stats" / "job.json").is_file()

    def test_undirected_recode_skips_request_round(self, undirected_store):
        manifest = recode_graph(job_settings(undirected_store, 3))
        edges = GraphManifest.load(undirected_store / "store").num_edges
        assert manifest.recode.messages == {"step2": edges}

    def test_directed_recode_exchanges_requests_and_replies(self, directed_store):
        manifest = recode_graph(job_settings(directed_store, 3))
        edges = GraphManifest.load(directed_store / "store").num_edges
        assert manifest.recode.messages.get("step1") == edges
        assert manifest.recode.messages.get("step2") == edges

    def test_recoding_twice_needs_force(self, undirected_store):
        settings = job_settings(undirected_store, 3)
        recode_graph(settings)
        with pytest.raises(ConfigError):
            recode_graph(settings)
        recode_graph(settings, force=True)

    @pytest.mark.parametrize("num_workers", [1, 3, 4])
    def test_pagerank(self, directed_store, num_workers):
        settings = job_settings(directed_store, num_workers, steps=8)
        recode_graph(settings)
        recoded = settings.model_copy(update={"mode": ExecutionMode.RECODED})
        assert_matches_oracle(directed_store, recoded, "pagerank", TOLERANCE)

    @pytest.mark.parametrize("num_workers", [1, 3, 4])
    def test_hashmin_labels_are_original_ids(self, undirected_store, num_workers):
        settings = job_settings(undirected_store, num_workers)
        recode_graph(settings)
        recoded = settings.model_copy(update={"mode": ExecutionMode.RECODED})
        assert_matches_oracle(undirected_store, recoded, "hashmin")

    def test_sssp_source_given_as_original_id(self, directed_store):
        neighbors = OracleGraph.from_text(directed_store / "store" / "graph.txt").neighbors
        source = max(v for v in neighbors if neighbors[v])
        settings = job_settings(directed_store, 3, source=source)
        recode_graph(settings)
        recoded = settings.model_copy(update={"mode": ExecutionMode.RECODED})
        assert_matches_oracle(directed_store, recoded, "sssp")

    def test_modes_agree(self, directed_store):
        settings = job_settings(directed_store, 4, steps=6)
        recode_graph(settings)
        normal = run_job(settings.model_copy(update={"output_path": str(directed_store / "n")}), "pagerank")
        recoded = run_job(
            settings.model_copy(update={"mode": ExecutionMode.RECODED, "output_path": str(directed_store / "r")}),
            "pagerank",
        )
        report = compare_outputs(read_output(recoded.output_path), read_output(normal.output_path), TOLERANCE)
        assert report.ok, str(report)
        assert normal.stats["supersteps"] == recoded.stats["supersteps"] == 6

    def test_recoded_mode_never_merges(self, directed_store):
        settings = job_settings(directed_store, 3, steps=4)
        recode_graph(settings)
        job = run_job(settings.model_copy(update={"mode": ExecutionMode.RECODED}), "pagerank")
        for worker in job.stats["workers"]:
            assert all(step["merge_calls"] == 0 for step in worker["steps"])

    def test_received_mask_built_once_per_superstep(self, directed_store):
        settings = job_settings(directed_store, 3, steps=4)
        recode_graph(settings)
        original_chunks = StateArray.chunks
        original_received = DigestArray.received
        calls = []

        def small_chunks(array, size=8):
            return original_chunks(array, 8)

        def counting_received(digest):
            calls.append(digest)
            return original_received(digest)

        with patch.object(StateArray, "chunks", small_chunks), \
                patch.object(DigestArray, "received", counting_received):
            job = run_job(settings.model_copy(update={"mode": ExecutionMode.RECODED}), "pagerank")

        assert max(w["num_vertices"] for w in job.stats["workers"]) > 8
        assert 0 < len(calls) <= 3 * job.stats["supersteps"]

    def test_worker_count_must_match(self, directed_store):
        recode_graph(job_settings(directed_store, 3))
        with pytest.raises(ConfigError):
            run_job(job_settings(directed_store, 4, mode="recoded"), "pagerank")

    def test_program_without_combiner_rejected(self, directed_store):
        recode_graph(job_settings(directed_store, 2))
        with pytest.raises(ConfigError):
            run_job(job_settings(directed_store, 2, mode="recoded"), "echo")

    def test_recoded_job_needs_recoding(self, directed_store):
        with pytest.raises(ConfigError):
            run_job(job_settings(directed_store, 2, mode="recoded"), "pagerank")


class TestFailures:
    """Errors surface from the worker that hit them."""

    def test_dangling_neighbor_stops_recoding(self, tmp_path):
        path = write_graph(tmp_path / "g.txt", {1: [2], 2: [3], 3: [404]})
        put_graph(path, tmp_path / "store")
        with pytest.raises(PreprocessingError, match="404"):
            recode_graph(job_settings(tmp_path, 3))

    def test_one_way_edge_stops_undirected_recoding(self, tmp_path):
        path = write_graph(tmp_path / "g.txt", {1: [2], 2: [1, 3], 3: []})
        put_graph(path, tmp_path / "store", directed=False)
        with pytest.raises(PreprocessingError):
            recode_graph(job_settings(tmp_path, 2))

    def test_hashmin_rejects_directed_graph(self, tmp_path):
        path = write_graph(tmp_path / "g.txt", {1: [2], 2: [], 3: [1]})
        put_graph(path, tmp_path / "store")
        with pytest.raises(GraphLoadError, match="undirected"):
            run_job(job_settings(tmp_path, 3), "hashmin")

    def test_negative_weight_rejected(self, tmp_path):
        path = write_graph(tmp_path / "g.txt", {1: [2], 2: []}, {1: [-1.0], 2: []})
        put_graph(path, tmp_path / "store", weighted=True)
        with pytest.raises(ConfigError):
            run_job(job_settings(tmp_path, 2, source=1), "sssp")

    def test_duplicate_vertex_rejected_by_put(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("1\t0\n2\t1 1\n1\t0\n")
        with pytest.raises(GraphLoadError, match="Duplicate"):
            put_graph(path, tmp_path / "store")
        assert not (tmp_path / "store" / "graph.txt").exists()

    def test_empty_graph_rejected(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# nothing here\n")
        with pytest.raises(GraphLoadError):
            put_graph(path, tmp_path / "store")

    def test_no_graph_in_store(self, tmp_path):
        with pytest.raises(ConfigError):
            run_job(job_settings(tmp_path, 2), "pagerank")

    def test_superstep_cap_stops_the_job(self, tmp_path):
        chain = {v: [v + 1] for v in range(1, 20)} | {20: []}
        put_graph(write_graph(tmp_path / "g.txt", chain), tmp_path / "store")
        job = run_job(job_settings(tmp_path, 2, source=1, max_supersteps=4), "sssp")
        values = read_output(job.output_path)
        assert job.stats["supersteps"] == 4
        assert values[4] == "3.0"
        assert values[10] == "inf"


class TestPut:
    """Storing graphs."""

    def test_detects_direction(self, tmp_path):
        directed = put_graph(write_graph(tmp_path / "d.txt", {1: [2], 2: []}), tmp_path / "s1")
        undirected = put_graph(write_graph(tmp_path / "u.txt", {1: [2], 2: [1]}), tmp_path / "s2")
        assert directed.directed
        assert not undirected.directed
        assert undirected.num_edges == 2
        assert undirected.max_id == 2

    def test_manifest_round_trip(self, tmp_path):
        stored = put_graph(write_graph(tmp_path / "d.txt", {5: [7], 7: []}), tmp_path / "store")
        loaded = GraphManifest.load(tmp_path / "store")
        assert loaded.to_json() == stored.to_json()
        assert "|V|=2" in str(loaded)
