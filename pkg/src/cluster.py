"""
Local cluster driver: place graphs in the shared store, launch n workers
(threads over the simulated network, or one process each over sockets),
and collect their statistics.
"""

import multiprocessing
import queue
import shutil
import threading
import time
import traceback
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .algorithms import create_program
from .algorithms.base import VertexProgram
from .comm.simulated import SimulatedNetwork
from .comm.socket_transport import SocketTransport
from .comm.transport import Transport
from .config.settings import ExecutionMode, Settings, TransportKind
from .engine.graph_text import edge_fingerprint, iter_portion
from .engine.stats import STATS_DIR, write_job_stats
from .models.manifest import GRAPH_FILE, GraphManifest, RecodeInfo
from .models.partition import MASK64
from .recode.preprocess import RECODE_DIR
from .utils.errors import (
    ConfigError,
    GraphLoadError,
    JobAborted,
    TransportError,
    WorkerFailed,
)
from .utils.logger import get_logger, setup_logger
from .worker import Worker

logger = get_logger()

# Errors that only report that some other unit or worker failed first
SECONDARY_ERRORS = (JobAborted, TransportError)
SECONDARY_KINDS = {"JobAborted", "TransportError", "TransportClosed"}

# Seconds between liveness checks of worker processes
PROCESS_POLL = 0.2


@dataclass
class JobResult:
    """What a finished job left behind."""
    task: str
    num_workers: int
    wall_seconds: float
    output_path: Path
    stats: dict


# ============================================
# PUT
# ============================================

def put_graph(
    input_file: str | Path,
    store_path: str | Path,
    weighted: bool = False,
    directed: Optional[bool] = None
) -> GraphManifest:
    """
    Validate a graph text file and place a normalized copy in the store.

    Args:
        input_file: Graph in `id<TAB>d(v) nbr [w] ...` format
        store_path: Shared store directory
        weighted: Adjacency items carry weights
        directed: Force the directed flag (None detects it from edge symmetry)

    Returns:
        The saved manifest

    Raises:
        GraphParseError: Malformed line (with its line number)
        GraphLoadError: Duplicate id or empty graph
    """
    store = Path(store_path)
    store.mkdir(parents=True, exist_ok=True)
    target = store / GRAPH_FILE
    partial = store / f"{GRAPH_FILE}.partial"

    seen: set[int] = set()
    num_edges = 0
    max_id = 0
    forward = 0
    backward = 0
    with open(partial, "w") as out:
        for vertex in iter_portion(input_file, 0, 1, weighted):
            if vertex.id in seen:
                partial.unlink(missing_ok=True)
                raise GraphLoadError(f"Duplicate vertex id {vertex.id}")
            seen.add(vertex.id)
            max_id = max(max_id, vertex.id)
            num_edges += vertex.degree

            if vertex.weights is not None:
                items = " ".join(f"{u} {w!r}" for u, w in zip(vertex.neighbors, vertex.weights))
            else:
                items = " ".join(str(u) for u in vertex.neighbors)
            out.write(f"{vertex.id}\t{vertex.degree}{' ' + items if items else ''}\n")

            if vertex.degree:
                sources = np.full(vertex.degree, vertex.id, dtype=np.uint64)
                targets = np.asarray(vertex.neighbors, dtype=np.uint64)
                forward += edge_fingerprint(sources, targets)
                backward += edge_fingerprint(targets, sources)

    if not seen:
        partial.unlink(missing_ok=True)
        raise GraphLoadError(f"{input_file} holds no vertices")

    partial.replace(target)
    symmetric = (forward & MASK64) == (backward & MASK64)
    manifest = GraphManifest(
        num_vertices=len(seen),
        num_edges=num_edges,
        directed=(not symmetric) if directed is None else directed,
        weighted=weighted,
        source_file=str(Path(input_file).resolve()),
        max_id=max_id,
    )
    manifest.save(store)
    logger.info(f"📦 Stored {manifest}")
    return manifest


# ============================================
# LAUNCHING
# ============================================

def make_program(settings: Settings, manifest: GraphManifest, algorithm: Optional[str]) -> Optional[VertexProgram]:
    """Fresh program instance for one worker (None for preprocessing)."""
    if algorithm is None:
        return None
    return create_program(
        algorithm,
        steps=settings.steps,
        source=settings.source,
        weighted=manifest.weighted,
        rounds=settings.echo_rounds,
    )


def run_worker(
    rank: int,
    settings: Settings,
    transport: Transport,
    manifest: GraphManifest,
    task: str,
    algorithm: Optional[str]
) -> None:
    """Body of one worker: a job run or a recoding pass."""
    worker = Worker(rank, settings, transport, manifest, make_program(settings, manifest, algorithm))
    if task == "recode":
        worker.run_recode()
    else:
        worker.run_job()


def root_cause(errors: dict[int, BaseException]) -> BaseException:
    """The failure that started it all: the first error that is not a consequence."""
    for rank in sorted(errors):
        error = errors[rank]
        if isinstance(error, WorkerFailed):
            if error.kind not in SECONDARY_KINDS:
                return error
        elif not isinstance(error, SECONDARY_ERRORS):
            return error
    return errors[min(errors)]


def _launch_simulated(settings: Settings, manifest: GraphManifest, task: str, algorithm: Optional[str]) -> None:
    network = SimulatedNetwork(
        settings.num_workers,
        max_in_flight=settings.max_in_flight,
        max_delay=settings.sim_max_delay,
        seed=settings.seed,
    )
    network.start()
    errors: dict[int, BaseException] = {}
    lock = threading.Lock()

    def body(rank: int) -> None:
        try:
            run_worker(rank, settings, network.transport(rank), manifest, task, algorithm)
        except BaseException as e:
            with lock:
                errors[rank] = e
            network.abort(f"worker {rank} failed: {e}")

    threads = [
        threading.Thread(target=body, args=(rank,), name=f"worker-{rank}", daemon=True)
        for rank in range(settings.num_workers)
    ]
    try:
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
    finally:
        network.shutdown()
    if errors:
        raise root_cause(errors)


def _process_main(
    rank: int,
    settings_data: dict,
    manifest_data: dict,
    task: str,
    algorithm: Optional[str],
    results: Any
) -> None:
    """Entry point of a worker process (spawned)."""
    settings = Settings(**settings_data)
    setup_logger(
        log_level=settings.log_level,
        log_to_file=settings.log_to_file,
        log_rotation=settings.log_rotation,
        log_retention_days=settings.log_retention_days,
        log_dir=settings.log_dir,
        role=f"worker-{rank}",
    )
    manifest = GraphManifest.from_json(manifest_data)
    transport = SocketTransport(rank, settings.addresses(), settings.max_in_flight)
    try:
        run_worker(rank, settings, transport, manifest, task, algorithm)
    except BaseException as e:
        get_logger(rank).debug(traceback.format_exc())
        results.put((rank, type(e).__name__, str(e)))
        raise SystemExit(1)
    results.put((rank, None, None))


def _launch_processes(settings: Settings, manifest: GraphManifest, task: str, algorithm: Optional[str]) -> None:
    context = multiprocessing.get_context("spawn")
    results = context.Queue()
    settings_data = settings.model_dump(mode="json")
    manifest_data = manifest.to_json()
    processes = [
        context.Process(
            target=_process_main,
            args=(rank, settings_data, manifest_data, task, algorithm, results),
            name=f"worker-{rank}",
        )
        for rank in range(settings.num_workers)
    ]
    for process in processes:
        process.start()

    errors: dict[int, BaseException] = {}
    reported: set[int] = set()
    try:
        while len(reported) < len(processes):
            try:
                rank, kind, message = results.get(timeout=PROCESS_POLL)
            except queue.Empty:
                for rank, process in enumerate(processes):
                    if rank not in reported and not process.is_alive():
                        reported.add(rank)
                        errors[rank] = WorkerFailed(
                            rank, "ProcessExit", f"exited with code {process.exitcode} without a report"
                        )
                continue
            reported.add(rank)
            if kind is not None:
                errors[rank] = WorkerFailed(rank, kind, message)
                logger.error(f"❌ Worker {rank} failed: {kind}: {message}")
    finally:
        for process in processes:
            process.join(timeout=5.0 if not errors else 1.0)
            if process.is_alive():
                process.terminate()
    if errors:
        raise root_cause(errors)


def launch(settings: Settings, manifest: GraphManifest, task: str = "job", algorithm: Optional[str] = None) -> float:
    """
    Run every worker to completion.

    Args:
        settings: Job configuration (transport, n, paths)
        manifest: Stored graph
        task: "job" (run a program) or "recode"
        algorithm: Program name for jobs

    Returns:
        Wall time in seconds

    Raises:
        The root-cause error of the first failing worker
    """
    started = time.monotonic()
    if settings.transport == TransportKind.SIMULATED:
        _launch_simulated(settings, manifest, task, algorithm)
    else:
        _launch_processes(settings, manifest, task, algorithm)
    return time.monotonic() - started


# ============================================
# COMMANDS
# ============================================

def recode_graph(settings: Settings, force: bool = False) -> GraphManifest:
    """
    Recode the stored graph for `settings.num_workers` workers.

    Raises:
        ConfigError: Already recoded and not forced
    """
    store = Path(settings.store_path)
    manifest = GraphManifest.load(store)
    if manifest.recode is not None and not force:
        raise ConfigError(
            f"Graph already recoded for {manifest.recode.num_workers} workers; use --force to redo it"
        )

    recode_stats = store / RECODE_DIR
    shutil.rmtree(recode_stats, ignore_errors=True)
    normal = settings.model_copy(update={"mode": ExecutionMode.NORMAL})
    wall = launch(normal, manifest, task="recode")

    job = write_job_stats(recode_stats, {"wall_seconds": wall, "task": "recode"})
    first = job["workers"][0]["load"] if job["workers"] else {}
    load_seconds = max((w["load"].get("seconds", 0.0) for w in job["workers"]), default=0.0)
    manifest.recode = RecodeInfo(
        num_workers=settings.num_workers,
        wall_seconds=wall,
        load_seconds=load_seconds,
        messages=dict(first.get("recode", {}).get("job_messages", {})),
        timestamp=datetime.now(),
    )
    manifest.save(store)
    logger.info(
        f"🔢 Recoded for {settings.num_workers} workers in {wall:.2f}s "
        f"(loading took {load_seconds:.2f}s, {manifest.recode.total_messages()} messages)"
    )
    return manifest


def run_job(settings: Settings, algorithm: str, extra: Optional[dict] = None) -> JobResult:
    """Run `algorithm` on the stored graph and merge the workers' stats."""
    store = Path(settings.store_path)
    manifest = GraphManifest.load(store)
    output = Path(settings.output_path)
    if output.exists():
        for stale in output.glob("part-*"):
            stale.unlink()
        shutil.rmtree(output / STATS_DIR, ignore_errors=True)

    # rejects unknown names before any worker starts
    make_program(settings, manifest, algorithm)

    wall = launch(settings, manifest, task="job", algorithm=algorithm)
    job = write_job_stats(output, {
        "wall_seconds": wall,
        "transport": settings.transport.value,
        "task": "job",
        **(extra or {}),
    })
    return JobResult("job", settings.num_workers, wall, output, job)
