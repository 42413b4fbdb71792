"""
ID recoding: replace sparse vertex ids by dense ids n * pos + rank.

Runs on a worker that loaded the graph in normal mode. Every vertex learns
its new id from its position in A; the adjacency lists are rewritten in a
few all-to-all rounds:

  directed    step 1  v asks each out-neighbor u for its new id
              step 2  u answers every request with (old, new)
              step 3  v rewrites its list from the answers (local)
  undirected  step 2  v tells each neighbor u its own (old, new)
              step 3  v rewrites its list from what it was told (local)
"""

from pathlib import Path
from typing import TYPE_CHECKING, Callable, Iterator, Optional

import numpy as np

from ..engine.oms import OmsRing
from ..engine.state_array import RECODED_INDEX_DTYPE
from ..models.context import ControlRecord
from ..models.partition import new_id, partition_array
from ..models.records import envelope_dtype
from ..streams.buffered import ReadStream, WriteStream, write_records
from ..utils.errors import PreprocessingError
from ..utils.logger import log_recode_step

if TYPE_CHECKING:
    from ..worker import Worker

REQUEST_DTYPE = envelope_dtype("<u8")
REPLY_PAYLOAD = np.dtype([("old", "<u8"), ("new", "<u8")])
REPLY_DTYPE = envelope_dtype(REPLY_PAYLOAD)

REQUEST_ROUND = 1
REPLY_ROUND = 2
SUMMARY_ROUND = 3

RECODE_DIR = "_recode"
MAP_FILE = "recode-map.tsv"
A_REC_FILE = "A_rec.bin"
SE_REC_FILE = "SE_rec.bin"

# Vertices whose adjacency lists are rewritten together in step 3
REWRITE_CHUNK = 4096


def assign_new_ids(index: np.ndarray, rank: int, num_workers: int) -> np.ndarray:
    """
    Recoded index of one worker: new id, degree and old id per position.

    Args:
        index: INDEX_DTYPE records sorted by old id
        rank: Worker index
        num_workers: |W|

    Returns:
        RECODED_INDEX_DTYPE records, new ids ascending
    """
    recoded = np.zeros(len(index), dtype=RECODED_INDEX_DTYPE)
    positions = np.arange(len(index), dtype=np.uint64)
    recoded["id"] = new_id(positions, np.uint64(rank), np.uint64(num_workers))
    recoded["degree"] = index["degree"]
    recoded["old_id"] = index["id"]
    return recoded


def route(ring: OmsRing, rows: np.ndarray, num_workers: int) -> None:
    """Append records to the OMS of the worker owning each target (old-id hash)."""
    if len(rows) == 0:
        return
    dests = partition_array(rows["target"], num_workers)
    for dest in np.unique(dests).tolist():
        selected = rows[dests == dest]
        ring.streams[dest].append_many(selected.tobytes(), rows.dtype.itemsize)


def rewrite_adjacency(
    sources: np.ndarray,
    edges: np.ndarray,
    replies: np.ndarray
) -> np.ndarray:
    """
    Replace old neighbor ids by new ones.

    Args:
        sources: Old id of the owning vertex, one per edge
        edges: Adjacency records (old neighbor ids)
        replies: REPLY_DTYPE records addressed to the owning vertices

    Returns:
        Copy of `edges` with recoded neighbor ids

    Raises:
        PreprocessingError: An edge has no answer (dangling neighbor)
    """
    lookup = dict(zip(
        zip(replies["target"].tolist(), replies["payload"]["old"].tolist()),
        replies["payload"]["new"].tolist(),
    ))
    out = edges.copy()
    mapped = []
    for source, neighbor in zip(sources.tolist(), edges["neighbor"].tolist()):
        recoded = lookup.get((source, neighbor))
        if recoded is None:
            raise PreprocessingError(
                f"Vertex {source} lists neighbor {neighbor}, but no new id arrived for it "
                f"(no such vertex, or it does not list {source} back)"
            )
        mapped.append(recoded)
    out["neighbor"] = mapped
    return out


class _SortedScan:
    """Hands out a target-sorted record file in slices bounded by target."""

    def __init__(self, path: Path, dtype: np.dtype, buffer_size: int, counters=None):
        self._stream = ReadStream(path, dtype, buffer_size, counters)
        self._chunks: Iterator[np.ndarray] = self._stream.iter_chunks()
        self._pending = np.empty(0, dtype=dtype)
        self._done = False

    def up_to(self, bound: int) -> np.ndarray:
        """All remaining records with target <= bound."""
        parts = []
        while True:
            cut = int(np.searchsorted(self._pending["target"], np.uint64(bound), side="right"))
            parts.append(self._pending[:cut])
            if cut < len(self._pending) or self._done:
                self._pending = self._pending[cut:]
                break
            chunk = next(self._chunks, None)
            if chunk is None:
                self._done = True
                self._pending = self._pending[cut:]
                break
            self._pending = chunk
        return np.concatenate(parts)

    def rest(self) -> np.ndarray:
        parts = [self._pending] + list(self._chunks)
        self._pending = self._pending[:0]
        self._done = True
        return np.concatenate(parts)

    def close(self) -> None:
        self._stream.close()


class RecodePreprocessor:
    """
    ID recoding of one worker's partition.

    Usage:
        RecodePreprocessor(worker).run()   # after worker.load_graph()
    """

    def __init__(self, worker: "Worker"):
        self.worker = worker
        self.rank = worker.rank
        self.n = worker.n
        self.directed = worker.manifest.directed
        self.logger = worker.logger
        self.index = worker.index
        self.recoded = assign_new_ids(worker.index, worker.rank, worker.n)
        self.messages: dict[str, int] = {}

    # ---- steps ----

    def _edges(self) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """(source old ids, source new ids, edges) per chunk of vertices."""
        worker = self.worker
        degrees = self.index["degree"]
        with ReadStream(worker.se_path, worker.edge_dtype, worker.b,
                        worker.stats.streams["SE"]) as se:
            for start in range(0, len(self.index), REWRITE_CHUNK):
                stop = min(start + REWRITE_CHUNK, len(self.index))
                counts = degrees[start:stop].astype(np.intp)
                edges = se.read_items(int(counts.sum()))
                yield (
                    np.repeat(self.index["id"][start:stop], counts),
                    np.repeat(self.recoded["id"][start:stop], counts),
                    edges,
                )

    def _send_requests(self, ring: OmsRing) -> None:
        for old_ids, _, edges in self._edges():
            rows = np.empty(len(edges), dtype=REQUEST_DTYPE)
            rows["target"] = edges["neighbor"]
            rows["payload"] = old_ids
            route(ring, rows, self.n)

    def _answer_requests(self, requests: Path) -> Callable[[OmsRing], None]:
        worker = self.worker
        ids = self.index["id"]

        def produce(ring: OmsRing) -> None:
            with ReadStream(requests, REQUEST_DTYPE, worker.b, worker.stats.streams["IMS"]) as reader:
                for chunk in reader.iter_chunks():
                    targets = chunk["target"]
                    positions = np.searchsorted(ids, targets)
                    clipped = np.minimum(positions, max(len(ids) - 1, 0))
                    if len(ids):
                        missing = ids[clipped] != targets
                    else:
                        missing = np.ones(len(targets), dtype=bool)
                    if missing.any():
                        j = int(np.flatnonzero(missing)[0])
                        raise PreprocessingError(
                            f"Vertex {int(chunk['payload'][j])} lists neighbor "
                            f"{int(targets[j])}, which does not exist"
                        )
                    rows = np.empty(len(chunk), dtype=REPLY_DTYPE)
                    rows["target"] = chunk["payload"]
                    rows["payload"]["old"] = targets
                    rows["payload"]["new"] = self.recoded["id"][clipped]
                    route(ring, rows, self.n)
        return produce

    def _announce(self, ring: OmsRing) -> None:
        for old_ids, new_ids, edges in self._edges():
            rows = np.empty(len(edges), dtype=REPLY_DTYPE)
            rows["target"] = edges["neighbor"]
            rows["payload"]["old"] = old_ids
            rows["payload"]["new"] = new_ids
            route(ring, rows, self.n)

    def _rewrite(self, replies: Path, output: Path) -> int:
        """Step 3: write S^E_rec in position order from the received answers."""
        worker = self.worker
        scan = _SortedScan(replies, REPLY_DTYPE, worker.b, worker.stats.streams["IMS"])
        written = 0
        try:
            with WriteStream(output, worker.b, worker.stats.streams["SE"]) as out:
                for start, (old_ids, _, edges) in zip(
                    range(0, len(self.index), REWRITE_CHUNK), self._edges()
                ):
                    stop = min(start + REWRITE_CHUNK, len(self.index))
                    answers = scan.up_to(int(self.index["id"][stop - 1]))
                    out.write_items(rewrite_adjacency(old_ids, edges, answers))
                    written += len(edges)
            stray = scan.rest()
            if len(stray):
                raise PreprocessingError(
                    f"Vertex {int(stray['payload']['old'][0])} lists neighbor "
                    f"{int(stray['target'][0])}, which does not exist"
                )
        finally:
            scan.close()
        return written

    # ---- driver ----

    def run(self) -> Optional[dict]:
        """
        Recode this worker's partition and persist A_rec, S^E_rec and the id map.

        Returns:
            Job-wide message counts per step (every worker gets the same)
        """
        worker = self.worker
        started = worker.stats.now()
        self.logger.info(
            f"🔢 Recoding {len(self.index)} vertices "
            f"({'directed' if self.directed else 'undirected'}, |W|={self.n})"
        )

        if self.directed:
            requests, sent = worker.exchange(REQUEST_ROUND, "recode-requests", REQUEST_DTYPE,
                                             self._send_requests)
            self.messages["step1"] = sent
            log_recode_step(self.rank, 1, sent, "asked neighbors for their new ids")
            replies, sent = worker.exchange(REPLY_ROUND, "recode-replies", REPLY_DTYPE,
                                            self._answer_requests(requests))
            requests.unlink(missing_ok=True)
            log_recode_step(self.rank, 2, sent, "answered with new ids")
        else:
            log_recode_step(self.rank, 1, 0, "skipped for an undirected graph")
            replies, sent = worker.exchange(REPLY_ROUND, "recode-replies", REPLY_DTYPE,
                                            self._announce)
            log_recode_step(self.rank, 2, sent, "told neighbors our new ids")
        self.messages["step2"] = sent

        scratch = worker.scratch
        edges = self._rewrite(replies, scratch / SE_REC_FILE)
        replies.unlink(missing_ok=True)
        write_records(scratch / A_REC_FILE, self.recoded, worker.b, worker.stats.streams["A"])
        self._write_map(scratch / MAP_FILE)
        log_recode_step(self.rank, 3, 0, f"rewrote {edges} adjacency items")

        merged = worker.transport.control_allreduce(SUMMARY_ROUND, ControlRecord(
            num_vertices=len(self.recoded),
            max_partition=len(self.recoded),
            sums=dict(self.messages),
        ))

        worker.stats.load["recode"] = {
            "seconds": worker.stats.now() - started,
            "messages": dict(self.messages),
            "job_messages": {k: merged.sums.get(k, 0) for k in self.messages},
        }
        worker.write_stats(Path(worker.store) / RECODE_DIR)
        self.logger.info(
            f"✅ Recoded ids {self.rank}..{self.n * max(len(self.recoded) - 1, 0) + self.rank} "
            f"(step of {self.n}), {edges} adjacency items"
        )
        return merged.sums

    def _write_map(self, path: Path) -> None:
        """old<TAB>new lines in position order."""
        with open(path, "w") as f:
            for start in range(0, len(self.recoded), REWRITE_CHUNK):
                part = self.recoded[start:start + REWRITE_CHUNK]
                f.write("".join(
                    f"{old}\t{new}\n"
                    for old, new in zip(part["old_id"].tolist(), part["id"].tolist())
                ))


def read_recode_map(path: str | Path) -> dict[int, int]:
    """Parse a recode-map.tsv file into {old id: new id}."""
    mapping = {}
    with open(path) as f:
        for line in f:
            if line.strip():
                old, new = line.split("\t")
                mapping[int(old)] = int(new)
    return mapping
