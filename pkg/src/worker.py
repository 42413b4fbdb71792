"""
Per-worker superstep engine.

A worker loads its share of the graph, then runs three long-lived units:
the computing unit (streams S^E and the incoming messages through the state
array and appends generated messages to the OMS ring), the sending unit
(ring-scans the OMSs and transmits fully-written files) and the receiving
unit (turns incoming batches into the next superstep's IMS, or folds them
into A_r in recoded mode). They coordinate through a SuperstepLedger.
"""

import shutil
import threading
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterator, Optional

import numpy as np

from .algorithms.base import VertexProgram
from .comm.batch import Batch, BatchKind
from .comm.transport import Transport
from .config.settings import ExecutionMode, Settings
from .engine.graph_text import edge_fingerprint, iter_portion
from .engine.ims import ImsBuilder, MessageCursor
from .engine.ledger import SuperstepLedger
from .engine.oms import OmsRing
from .engine.state_array import INDEX_DTYPE, StateArray, load_index
from .engine.stats import WorkerStats
from .models.context import ControlRecord, SuperstepContext
from .models.manifest import GraphManifest
from .models.partition import MASK64, hash_partition, mix64
from .models.records import Adjacency, RecordLayout, VertexState, decode_records
from .recode.digest import CombineArray, DigestArray, combine_outgoing
from .recode.preprocess import RecodePreprocessor
from .streams.buffered import ReadStream, WriteStream, read_all, write_records
from .streams.counters import IoCounters
from .streams.merge import kway_merge, sort_run
from .utils.errors import (
    ComputeError,
    ConfigError,
    EngineError,
    GraphLoadError,
    JobAborted,
    ProtocolError,
)
from .utils.logger import get_logger, log_io_summary, log_superstep

# Records exchanged while loading: one header (kind 0, aux = degree) followed
# by one item per adjacency entry (kind 1, aux = neighbor)
LOAD_DTYPE = np.dtype([
    ("target", "<u8"),
    ("kind", "u1"),
    ("aux", "<u8"),
    ("weight", "<f8"),
])
LOAD_ROUND = 0


class WorkerState(Enum):
    """Worker lifecycle."""
    CREATED = "CREATED"
    LOADING = "LOADING"
    RECODING = "RECODING"
    RUNNING = "RUNNING"
    DUMPING = "DUMPING"
    FINISHED = "FINISHED"
    FAILED = "FAILED"


class SendVariant(Enum):
    """How the sending unit turns OMS files into batches."""
    PLAIN = "plain"         # one file per batch
    COMBINED = "combined"   # all ready files, merge-sorted and combined
    RECODED = "recoded"     # all ready files, folded through A_s


class Worker:
    """
    One worker of an n-worker job.

    Usage:
        worker = Worker(rank, settings, transport, manifest, program)
        worker.run_job()        # load, supersteps, dump, stats
        worker.run_recode()     # load, ID recoding, persist recoded arrays
    """

    def __init__(
        self,
        rank: int,
        settings: Settings,
        transport: Transport,
        manifest: GraphManifest,
        program: Optional[VertexProgram] = None
    ):
        """
        Initialize worker.

        Args:
            rank: Worker index
            settings: Job configuration
            transport: Connected (or connectable) transport endpoint
            manifest: Stored graph description
            program: Vertex program (None for preprocessing-only jobs)
        """
        self.rank = rank
        self.settings = settings
        self.transport = transport
        self.manifest = manifest
        self.program = program
        self.n = settings.num_workers
        self.mode = settings.mode
        self.recoded = settings.mode == ExecutionMode.RECODED
        self.logger = get_logger(rank)
        self.state = WorkerState.CREATED

        self.b = settings.stream_buffer_b
        self.k = settings.merge_fanin_k
        self.scratch = settings.worker_scratch(rank)
        self.scratch.mkdir(parents=True, exist_ok=True)
        self.store = Path(settings.store_path)

        value_dtype = program.value_dtype if program else "<u8"
        message_dtype = program.message_dtype if program else "<u8"
        self.layout = RecordLayout(value_dtype, message_dtype, weighted=manifest.weighted)
        self.edge_dtype = self.layout.adjacency_dtype
        self.envelope_dtype = self.layout.envelope_dtype
        settings.check_record_size(max(self.layout.largest_record, LOAD_DTYPE.itemsize))

        if program is not None and self.recoded and not program.has_combiner:
            raise ConfigError(f"{program.name} declares no combiner; recoded mode needs one")

        self.stats = WorkerStats(
            rank, self.n, self.mode.value, program.name if program else "recode", self.k
        )
        self.ledger = SuperstepLedger()

        self.index: Optional[np.ndarray] = None
        self.A: Optional[StateArray] = None
        self.se_path: Optional[Path] = None
        self.num_vertices = 0
        self.max_partition = 0
        self.aggregated: Any = None
        self.combine_array: Optional[CombineArray] = None
        self._last_compute_end = 0.0

        if program is None:
            self.variant = SendVariant.PLAIN
        elif self.recoded:
            self.variant = SendVariant.RECODED
        elif program.has_combiner:
            self.variant = SendVariant.COMBINED
        else:
            self.variant = SendVariant.PLAIN

    # ============================================
    # ENTRY POINTS
    # ============================================

    def run_job(self) -> WorkerStats:
        """Load the graph, run supersteps until termination, dump results."""
        try:
            self.transport.start()
            self.state = WorkerState.LOADING
            if self.recoded:
                self.load_recoded()
            else:
                self.load_graph()
            self.state = WorkerState.RUNNING
            self.run_supersteps()
            self.state = WorkerState.DUMPING
            self.dump_results()
            self.state = WorkerState.FINISHED
            return self.stats
        except BaseException:
            self.state = WorkerState.FAILED
            raise
        finally:
            self._finish()

    def run_recode(self) -> WorkerStats:
        """Load the graph in normal mode and write the recoded arrays."""
        try:
            self.transport.start()
            self.state = WorkerState.LOADING
            self.load_graph()
            self.state = WorkerState.RECODING
            RecodePreprocessor(self).run()
            self.state = WorkerState.FINISHED
            return self.stats
        except BaseException:
            self.state = WorkerState.FAILED
            raise
        finally:
            self._finish()

    def _finish(self) -> None:
        self.stats.finish()
        self.stats.transport = self.transport.summary()
        try:
            self.transport.close()
        except EngineError as e:
            self.logger.warning(f"Transport close failed: {e}")
        for name in ("oms", "ims", "exchange"):
            shutil.rmtree(self.scratch / name, ignore_errors=True)

    def write_stats(self, directory: Path) -> Path:
        """Stamp the wall time and transport counts, then write worker-<rank>.json."""
        self.stats.finish()
        self.stats.transport = self.transport.summary()
        return self.stats.write(directory)

    # ============================================
    # UNIT PLUMBING
    # ============================================

    def _fail(self, unit: str, error: BaseException) -> None:
        if isinstance(error, (JobAborted,)) or (self.ledger.failure is not None):
            self.ledger.fail(unit, error)
            return
        self.logger.opt(exception=error).error(f"❌ {unit} unit failed: {error}")
        self.ledger.fail(unit, error)
        self.transport.abort(f"{unit} unit of worker {self.rank} failed")

    def _guard(self, unit: str, fn: Callable, *args) -> None:
        try:
            fn(*args)
        except BaseException as e:
            self._fail(unit, e)

    def _start_unit(self, unit: str, fn: Callable, *args) -> threading.Thread:
        thread = threading.Thread(
            target=self._guard,
            args=(unit, fn) + args,
            name=f"w{self.rank}-{unit}",
            daemon=True,
        )
        thread.start()
        return thread

    def _raise_failure(self) -> None:
        if self.ledger.failure is not None:
            raise self.ledger.failure

    # ============================================
    # SENDING
    # ============================================

    def _send_ring(self, step: int, ring: OmsRing, variant: SendVariant) -> tuple[int, int]:
        """
        Ring-scan the OMSs of one step until every destination got its end tag.

        Returns:
            (DATA batches sent, payload bytes sent)
        """
        tagged: set[int] = set()
        batches = 0
        sent_bytes = 0
        while len(tagged) < self.n:
            dest = ring.pick()
            if dest is not None:
                payload = self._build_batch(step, ring, dest, variant)
                if payload:
                    self.transport.send_batch(dest, Batch.data(step, payload))
                    batches += 1
                    sent_bytes += len(payload)
                ring.position = dest
                continue

            drained = [d for d in range(self.n) if d not in tagged and ring.exhausted(d)]
            if drained:
                for d in drained:
                    self.transport.send_batch(d, Batch.end_tag(step))
                    tagged.add(d)
                continue

            if self.ledger.failure is not None:
                raise JobAborted(f"Sending of step {step} stopped: {self.ledger.failed_unit} failed")
            ring.wait(0.05)
        return batches, sent_bytes

    def _build_batch(self, step: int, ring: OmsRing, dest: int, variant: SendVariant) -> bytes:
        stream = ring.streams[dest]
        oms_counters = self.stats.streams["OMS"]

        if variant == SendVariant.PLAIN:
            path = stream.fetch_next()
            with ReadStream(path, np.dtype("u1"), self.b, oms_counters) as reader:
                payload = b"".join(chunk.tobytes() for chunk in reader.iter_chunks())
            path.unlink(missing_ok=True)
            return payload

        paths = stream.fetch_all_ready()

        if variant == SendVariant.RECODED:
            out = combine_outgoing(self._drain_files(paths, oms_counters), self.combine_array, dest)
            return out.tobytes()

        combiner = self.program.combiner
        merge_counters = self.stats.streams["MERGE"]
        for path in paths:
            self._sort_file(path, oms_counters, merge_counters)
        merged = stream.directory / f"combined-{paths[0].name}"
        report = kway_merge(
            paths, merged, self.envelope_dtype, k=self.k, combiner=combiner,
            scratch=stream.directory, buffer_size=self.b, counters=merge_counters,
        )
        if report.passes:
            self.stats.step(step).merge_calls += 1
        payload = read_all(merged, self.envelope_dtype, self.b, merge_counters).tobytes()
        for path in paths + [merged]:
            path.unlink(missing_ok=True)
        return payload

    def _sort_file(self, path: Path, oms_counters: IoCounters, merge_counters: IoCounters) -> None:
        """Rewrite one OMS file (at most B bytes) as a target-sorted run."""
        records = read_all(path, self.envelope_dtype, self.b, oms_counters)
        write_records(path, sort_run(records), self.b, merge_counters)

    def _drain_files(self, paths: list[Path], counters: IoCounters) -> Iterator[np.ndarray]:
        """Yield the envelopes of `paths` one buffer at a time, deleting each file once read."""
        for path in paths:
            with ReadStream(path, self.envelope_dtype, self.b, counters) as reader:
                yield from reader.iter_chunks()
            path.unlink(missing_ok=True)

    # ============================================
    # RECEIVING
    # ============================================

    def _receive_step(self, step: int, sink: Callable[[bytes], None], envelope_size: int) -> int:
        """
        Receive until every worker's end tag for `step` arrived.

        Returns:
            Number of DATA payload bytes received
        """
        tagged: set[int] = set()
        received = 0
        while len(tagged) < self.n:
            sender, batch = self.transport.recv_batch()
            if batch.superstep != step:
                raise ProtocolError(
                    f"Worker {self.rank} received {batch!r} from worker {sender} "
                    f"while collecting step {step}"
                )
            if batch.kind == BatchKind.END_TAG:
                if sender in tagged:
                    raise ProtocolError(f"Second end tag of step {step} from worker {sender}")
                tagged.add(sender)
                continue
            if sender in tagged:
                raise ProtocolError(f"Data from worker {sender} after its end tag of step {step}")
            batch.validate(envelope_size)
            sink(batch.payload)
            received += len(batch.payload)
        return received

    # ============================================
    # EXCHANGE ROUNDS (loading and recoding)
    # ============================================

    def exchange(
        self,
        round_no: int,
        label: str,
        dtype: np.dtype,
        produce: Callable[[OmsRing], None]
    ) -> tuple[Path, int]:
        """
        One synchronous all-to-all round outside the superstep pipeline.

        `produce` appends records (first field `target`) to the ring in the
        calling thread while a sending and a receiving unit run alongside.
        Received records are merge-sorted by target into one file.

        Args:
            round_no: Tag stamped on every batch of the round
            label: Name used for the round's scratch files
            dtype: Record dtype
            produce: Fills the ring (destination chosen by the caller)

        Returns:
            (sorted file of received records, records sent by this worker)
        """
        root = self.scratch / "exchange" / label
        ring = OmsRing(
            root / "oms", round_no, self.rank, self.n,
            self.settings.split_size_B, self.b, self.stats.streams["OMS"],
        )
        output = self.scratch / f"{label}.bin"
        builder = ImsBuilder(
            root / "ims", output, dtype, self.k, None, self.b,
            self.stats.streams["IMS"], self.stats.streams["MERGE"],
        )

        def receive() -> None:
            self._receive_step(round_no, builder.add_batch, dtype.itemsize)
            builder.finish()

        sender = self._start_unit("send", self._send_ring, round_no, ring, SendVariant.PLAIN)
        receiver = self._start_unit("receive", receive)
        try:
            produce(ring)
        except BaseException as e:
            self._fail("compute", e)
        finally:
            ring.finalize_all()
        sender.join()
        receiver.join()
        self._raise_failure()

        self.transport.receiver_barrier(round_no)
        sent = ring.messages_appended
        ring.remove()
        shutil.rmtree(root, ignore_errors=True)
        return output, sent

    # ============================================
    # LOADING
    # ============================================

    def load_graph(self, partition_mode: ExecutionMode = ExecutionMode.NORMAL) -> None:
        """
        Parse this worker's portion of the graph file, route every vertex to
        its owner, and split the owner's sorted records into A and S^E.

        Args:
            partition_mode: Hash used for routing (recoded = id modulo n)
        """
        started = self.stats.now()
        graph_path = self.manifest.graph_path(self.store)
        weighted = self.manifest.weighted
        self.logger.info(f"📥 Loading portion {self.rank + 1}/{self.n} of {graph_path}")

        def produce(ring: OmsRing) -> None:
            parsed = 0
            for vertex in iter_portion(graph_path, self.rank, self.n, weighted):
                rows = np.zeros(1 + vertex.degree, dtype=LOAD_DTYPE)
                rows["target"] = vertex.id
                rows["aux"][0] = vertex.degree
                rows["kind"][1:] = 1
                if vertex.degree:
                    rows["aux"][1:] = vertex.neighbors
                    if vertex.weights is not None:
                        rows["weight"][1:] = vertex.weights
                dest = hash_partition(vertex.id, self.n, partition_mode)
                ring.streams[dest].append_many(rows.tobytes(), LOAD_DTYPE.itemsize)
                parsed += 1
            self.stats.load["parsed_vertices"] = parsed

        sorted_path, _ = self.exchange(LOAD_ROUND, "load", LOAD_DTYPE, produce)

        self.se_path = self.scratch / "SE.bin"
        headers = []
        num_edges = 0
        forward = 0
        backward = 0
        last_id = None
        with ReadStream(sorted_path, LOAD_DTYPE, self.b, self.stats.streams["MERGE"]) as reader, \
                WriteStream(self.se_path, self.b, self.stats.streams["SE"]) as se_out:
            for chunk in reader.iter_chunks():
                header = chunk[chunk["kind"] == 0]
                items = chunk[chunk["kind"] == 1]
                if len(header):
                    ids = header["target"]
                    if last_id is not None and int(ids[0]) == last_id:
                        raise GraphLoadError(f"Duplicate vertex id {last_id}")
                    repeats = np.flatnonzero(ids[1:] == ids[:-1])
                    if len(repeats):
                        raise GraphLoadError(f"Duplicate vertex id {int(ids[repeats[0]])}")
                    last_id = int(ids[-1])
                    headers.append(header[["target", "aux"]].copy())
                if len(items):
                    edges = np.zeros(len(items), dtype=self.edge_dtype)
                    edges["neighbor"] = items["aux"]
                    if weighted:
                        edges["weight"] = items["weight"]
                    if self.program is not None:
                        self.program.check_edges(edges)
                    se_out.write_items(edges)
                    num_edges += len(items)
                    forward += edge_fingerprint(items["target"], items["aux"])
                    backward += edge_fingerprint(items["aux"], items["target"])
        sorted_path.unlink(missing_ok=True)

        index = np.zeros(sum(len(h) for h in headers), dtype=INDEX_DTYPE)
        if headers:
            stacked = np.concatenate(headers)
            index["id"] = stacked["target"]
            index["degree"] = stacked["aux"]
        self.index = index
        write_records(self.scratch / "A.bin", index, self.b, self.stats.streams["A"])

        merged = self.transport.control_allreduce(LOAD_ROUND, ControlRecord(
            num_vertices=len(index),
            max_partition=len(index),
            sums={"edges": num_edges, "forward": forward, "backward": backward},
        ))
        self._check_loaded(merged)

        if self.program is not None:
            self.A = StateArray.from_index(index, self.program)
            self.stats.memory.hold("A", self.A.nbytes)

        self.stats.num_vertices = len(index)
        self.stats.num_edges = num_edges
        self.stats.load.update({
            "seconds": self.stats.now() - started,
            "vertices": len(index),
            "edges": num_edges,
            "se_bytes": self.se_path.stat().st_size,
        })
        self.logger.info(
            f"✅ Loaded {len(index)} vertices, {num_edges} edges "
            f"(|V|={self.num_vertices}, max |V(W)|={self.max_partition})"
        )

    def _check_loaded(self, merged: ControlRecord) -> None:
        self.num_vertices = merged.num_vertices
        self.max_partition = merged.max_partition
        if merged.num_vertices == 0:
            raise GraphLoadError("Graph is empty; refusing to run")
        needs_symmetry = self.program is not None and self.program.undirected
        forward = merged.sums.get("forward", 0) & MASK64
        backward = merged.sums.get("backward", 0) & MASK64
        if needs_symmetry and forward != backward:
            raise GraphLoadError(
                f"{self.program.name} needs an undirected graph: some edge is "
                f"listed in only one adjacency list"
            )

    def load_recoded(self) -> None:
        """Load the recoded arrays written by `recode` from local scratch."""
        started = self.stats.now()
        info = self.manifest.recode
        if info is None:
            raise ConfigError("Graph has not been recoded; run `recode` first")
        if info.num_workers != self.n:
            raise ConfigError(
                f"Graph was recoded for {info.num_workers} workers, job has {self.n}"
            )

        index = load_index(self.scratch / "A_rec.bin", recoded=True, buffer_size=self.b,
                           counters=self.stats.streams["A"])
        self.index = index
        self.se_path = self.scratch / "SE_rec.bin"
        num_edges = int(index["degree"].sum()) if len(index) else 0
        if self.program is not None and num_edges:
            with ReadStream(self.se_path, self.edge_dtype, self.b) as reader:
                for chunk in reader.iter_chunks():
                    self.program.check_edges(chunk)

        self.A = StateArray.from_index(index, self.program, recoded=True)
        self.stats.memory.hold("A", self.A.nbytes)

        lookups = {}
        for name, old_id in self.program.id_parameters().items():
            found = self.A.find_old_id(old_id)
            if found is not None:
                lookups[name] = found

        merged = self.transport.control_allreduce(LOAD_ROUND, ControlRecord(
            num_vertices=len(index),
            max_partition=len(index),
            lookups=lookups,
            sums={"edges": num_edges},
        ))
        self._check_loaded(merged)

        translated = {}
        for name, old_id in self.program.id_parameters().items():
            if name not in merged.lookups:
                self.logger.warning(f"Parameter {name}={old_id} names no vertex of the graph")
            translated[name] = merged.lookups.get(name, MASK64)
        self.program.set_id_parameters(translated)

        self.combine_array = CombineArray(self.max_partition, self.program, self.n)
        self.stats.memory.hold("A_s", self.combine_array.nbytes)

        self.stats.num_vertices = len(index)
        self.stats.num_edges = num_edges
        self.stats.load.update({
            "seconds": self.stats.now() - started,
            "vertices": len(index),
            "edges": num_edges,
            "se_bytes": self.se_path.stat().st_size if self.se_path.exists() else 0,
        })
        self.logger.info(f"✅ Loaded recoded partition: {len(index)} vertices, {num_edges} edges")

    # ============================================
    # SUPERSTEPS
    # ============================================

    def run_supersteps(self) -> int:
        """
        Run the three units until the job terminates.

        Returns:
            Number of supersteps executed
        """
        self.stats.memory.hold("buffers", (self.k + 1) * self.b + 2 * self.settings.split_size_B)
        self.logger.info(
            f"🚀 Running {self.program.describe()} in {self.mode.value} mode "
            f"({self.variant.value} sending)"
        )
        units = [
            self._start_unit("receive", self._receive_unit),
            self._start_unit("send", self._send_unit),
            self._start_unit("compute", self._compute_unit),
        ]
        for unit in units:
            unit.join()
        self._raise_failure()
        self.logger.info(f"🏁 Finished after {self.stats.supersteps} supersteps")
        return self.stats.supersteps

    def _compute_unit(self) -> None:
        step = 1
        ledger = self.ledger
        while True:
            ledger.wait_until(lambda: ledger.compute_permit >= step, f"compute permit of step {step}")
            ring = OmsRing(
                self.scratch / "oms", step, self.rank, self.n,
                self.settings.split_size_B, self.b, self.stats.streams["OMS"],
            )
            ledger.publish_ring(step, ring)
            inbound = ledger.take_inbound(step - 1) if step > 1 else None

            local = self._compute_pass(step, ring, inbound)
            ring.finalize_all()

            merge = self.program.merge_aggregates if self.program.has_aggregator else None
            merged = self.transport.control_allreduce(step, local, merge)
            self.aggregated = merged.aggregate
            terminate = merged.should_terminate() or step >= self.settings.max_supersteps
            if terminate and not merged.should_terminate():
                self.logger.warning(f"Stopping at the superstep cap ({step})")
            self.stats.supersteps = step
            ledger.decide(step, terminate)
            if terminate:
                return
            step += 1

    def _send_unit(self) -> None:
        step = 1
        while True:
            ring = self.ledger.take_ring(step)
            if ring is None:
                return
            record = self.stats.step(step)
            record.send_start = self.stats.now()
            batches, sent_bytes = self._send_ring(step, ring, self.variant)
            record.send_end = self.stats.now()
            record.batches_sent = batches
            record.bytes_sent = sent_bytes
            ring.remove()
            step += 1

    def _receive_unit(self) -> None:
        step = 1
        ledger = self.ledger
        while True:
            record = self.stats.step(step)
            if self.recoded:
                digest = DigestArray(len(self.A), self.program, self.rank, self.n)
                self.stats.memory.hold(f"A_r-{step}", digest.nbytes)

                def sink(payload: bytes, digest=digest) -> None:
                    digest.digest(decode_records(payload, self.envelope_dtype))

                record.bytes_received = self._receive_step(step, sink, self.envelope_dtype.itemsize)
                record.messages_received = digest.messages
                inbound = digest
            else:
                builder = ImsBuilder(
                    self.scratch / "ims" / f"step-{step}",
                    self.scratch / f"SI-{step:06d}.bin",
                    self.envelope_dtype,
                    self.k,
                    self.program.combiner,
                    self.b,
                    self.stats.streams["IMS"],
                    self.stats.streams["MERGE"],
                )
                record.bytes_received = self._receive_step(
                    step, builder.add_batch, self.envelope_dtype.itemsize
                )
                report = builder.finish()
                record.messages_received = builder.messages
                record.ims_runs = report.runs
                record.merge_passes = report.passes
                record.merge_calls += 1
                inbound = builder.output
            record.receive_end = self.stats.now()

            ledger.publish_inbound(step, inbound)
            ledger.grant_compute(step + 1)
            self.transport.receiver_barrier(step)
            ledger.grant_send(step + 1)
            ledger.wait_until(lambda: ledger.decided_step >= step, f"decision on step {step}")
            if ledger.terminate_after == step:
                leftover = ledger.take_inbound(step)
                if isinstance(leftover, Path):
                    leftover.unlink(missing_ok=True)
                self.stats.memory.release(f"A_r-{step}")
                return
            step += 1

    def _compute_pass(self, step: int, ring: OmsRing, inbound: Any) -> ControlRecord:
        """
        One pass over A and S^E.

        A vertex is computed when it is active or has messages; runs of
        vertices needing nothing are skipped over in S^E by their summed
        degrees.
        """
        program = self.program
        record = self.stats.step(step)
        record.compute_start = self.stats.now()
        n = self.n
        streams = ring.streams
        pack = self.layout.pack_envelope

        if self.recoded:
            def send(target: int, payload: Any) -> None:
                streams[target % n].append(pack(target, payload))
        else:
            def send(target: int, payload: Any) -> None:
                streams[mix64(target) % n].append(pack(target, payload))

        aggregate = [None]
        if program.has_aggregator:
            merge = program.merge_aggregates

            def contribute(value: Any) -> None:
                aggregate[0] = value if aggregate[0] is None else merge(aggregate[0], value)
        else:
            def contribute(value: Any) -> None:
                raise ConfigError(f"{program.name} declares no aggregator")

        ctx = SuperstepContext(
            superstep=step,
            num_vertices=self.num_vertices,
            num_workers=n,
            aggregated=self.aggregated,
            _send=send,
            _contribute=contribute,
        )

        cursor: Optional[MessageCursor] = None
        digest: Optional[DigestArray] = None
        if isinstance(inbound, Path):
            cursor = MessageCursor(inbound, self.envelope_dtype, self.b, self.stats.streams["SI"])
        elif isinstance(inbound, DigestArray):
            digest = inbound
            received_mask = digest.received()

        se = ReadStream(self.se_path, self.edge_dtype, self.b, self.stats.streams["SE"])
        computed = 0
        skips = 0
        pending_skip = 0
        try:
            for start, stop in self.A.chunks():
                ids, values, actives, degrees = self.A.load_chunk(start, stop)
                if digest is not None:
                    received = received_mask[start:stop].tolist()
                    folded = digest.slots[start:stop].tolist()

                for j, vertex_id in enumerate(ids):
                    if cursor is not None:
                        upcoming = cursor.peek()
                        if upcoming is not None and upcoming < vertex_id:
                            dropped = cursor.drop_below(vertex_id)
                            self.logger.warning(
                                f"Dropped {dropped} messages addressed to missing vertices "
                                f"below {vertex_id}"
                            )
                            upcoming = cursor.peek()
                        has_messages = upcoming == vertex_id
                    elif digest is not None:
                        has_messages = received[j]
                    else:
                        has_messages = False

                    if not actives[j] and not has_messages:
                        pending_skip += degrees[j]
                        continue
                    if pending_skip:
                        se.skip(pending_skip)
                        skips += 1
                        pending_skip = 0

                    items = se.read_items(degrees[j])
                    if not has_messages:
                        messages = []
                    elif cursor is not None:
                        messages = cursor.take(vertex_id)
                    else:
                        messages = [folded[j]]

                    vertex = VertexState(vertex_id, values[j], True, degrees[j])
                    try:
                        program.compute(vertex, Adjacency(items), messages, ctx)
                    except EngineError:
                        raise
                    except Exception as e:
                        raise ComputeError(vertex_id, step, e) from e
                    values[j] = vertex.value
                    actives[j] = vertex.active
                    computed += 1

                self.A.store_chunk(start, values, actives)

            if cursor is not None:
                dropped = cursor.drop_rest()
                if dropped:
                    self.logger.warning(f"Dropped {dropped} messages addressed to missing vertices")
                record.dropped_messages = cursor.dropped
                record.si_size = cursor.size_bytes
                record.si_bytes_read = cursor.bytes_read
        finally:
            se.close()
            if cursor is not None:
                cursor.close()
                inbound.unlink(missing_ok=True)
            if digest is not None:
                self.stats.memory.release(f"A_r-{step - 1}")

        record.compute_end = self.stats.now()
        record.computed = computed
        record.messages = ctx.messages_sent
        record.skips = skips
        record.se_size = se.size_bytes
        record.se_bytes_read = se.bytes_read
        record.se_refills = se.refills
        record.oms_bytes_written = ring.bytes_appended

        log_superstep(
            self.rank, step, computed, ctx.messages_sent,
            wall_seconds=record.compute_end - self._last_compute_end,
            busy_seconds=record.busy_seconds,
            details={"skips": skips},
        )
        log_io_summary(self.rank, step, self.stats.streams.snapshot())
        self._last_compute_end = record.compute_end

        return ControlRecord(
            any_message_sent=ctx.messages_sent > 0,
            any_vertex_active=self.A.any_active(),
            aggregate=aggregate[0],
            messages=ctx.messages_sent,
        )

    # ============================================
    # OUTPUT
    # ============================================

    def dump_results(self) -> Path:
        """Write `id<TAB>value` lines (original ids) to <out>/part-<rank>."""
        output = Path(self.settings.output_path)
        output.mkdir(parents=True, exist_ok=True)
        path = output / f"part-{self.rank:05d}"
        format_value = self.program.format_value
        with open(path, "w") as f:
            for start, stop in self.A.chunks():
                ids = self.A.output_ids[start:stop].tolist()
                values = self.A.records["value"][start:stop].tolist()
                f.write("".join(f"{i}\t{format_value(v)}\n" for i, v in zip(ids, values)))
        self.write_stats(output)
        self.logger.info(f"💾 Wrote {len(self.A)} results to {path}")
        return path
