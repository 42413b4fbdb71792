"""
Per-worker and per-job instrumentation: superstep timings, stream I/O,
merge activity and tracked memory, written as JSON next to the output.
"""

import json
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from ..streams.counters import StreamStats
from ..streams.merge import expected_passes

STATS_DIR = "_stats"


@dataclass
class StepStats:
    """What one worker did in one superstep (times relative to worker start)."""
    superstep: int
    computed: int = 0
    messages: int = 0
    skips: int = 0
    dropped_messages: int = 0

    compute_start: Optional[float] = None
    compute_end: Optional[float] = None
    send_start: Optional[float] = None
    send_end: Optional[float] = None
    receive_end: Optional[float] = None

    batches_sent: int = 0
    bytes_sent: int = 0
    messages_received: int = 0
    bytes_received: int = 0

    se_size: int = 0
    se_bytes_read: int = 0
    se_refills: int = 0
    si_size: int = 0
    si_bytes_read: int = 0
    oms_bytes_written: int = 0

    ims_runs: int = 0
    merge_calls: int = 0
    merge_passes: int = 0

    @property
    def busy_seconds(self) -> float:
        if self.compute_start is None or self.compute_end is None:
            return 0.0
        return self.compute_end - self.compute_start

    @property
    def send_seconds(self) -> float:
        if self.send_start is None or self.send_end is None:
            return 0.0
        return self.send_end - self.send_start


class MemoryTracker:
    """Bytes held by named resident structures, with the peak total."""

    def __init__(self):
        self._held: dict[str, int] = {}
        self._lock = threading.Lock()
        self.peak = 0
        self.peak_breakdown: dict[str, int] = {}

    def hold(self, name: str, nbytes: int) -> None:
        with self._lock:
            self._held[name] = nbytes
            total = sum(self._held.values())
            if total > self.peak:
                self.peak = total
                self.peak_breakdown = dict(self._held)

    def release(self, name: str) -> None:
        with self._lock:
            self._held.pop(name, None)

    @property
    def current(self) -> int:
        with self._lock:
            return sum(self._held.values())


class WorkerStats:
    """Instrumentation of one worker for one job."""

    def __init__(self, rank: int, num_workers: int, mode: str, algorithm: str, merge_fanin: int):
        self.rank = rank
        self.num_workers = num_workers
        self.mode = mode
        self.algorithm = algorithm
        self.merge_fanin = merge_fanin
        self.started = time.monotonic()

        self.streams = StreamStats()
        self.memory = MemoryTracker()
        self.load: dict = {}
        self.transport: dict = {}
        self.num_vertices = 0
        self.num_edges = 0
        self.supersteps = 0
        self.wall_seconds = 0.0
        self._steps: dict[int, StepStats] = {}
        self._lock = threading.Lock()

    def now(self) -> float:
        return time.monotonic() - self.started

    def step(self, superstep: int) -> StepStats:
        with self._lock:
            record = self._steps.get(superstep)
            if record is None:
                record = StepStats(superstep)
                self._steps[superstep] = record
            return record

    @property
    def steps(self) -> list[StepStats]:
        with self._lock:
            return [self._steps[i] for i in sorted(self._steps)]

    def finish(self) -> None:
        self.wall_seconds = self.now()

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "num_workers": self.num_workers,
            "mode": self.mode,
            "algorithm": self.algorithm,
            "merge_fanin": self.merge_fanin,
            "num_vertices": self.num_vertices,
            "num_edges": self.num_edges,
            "supersteps": self.supersteps,
            "wall_seconds": self.wall_seconds,
            "load": self.load,
            "transport": self.transport,
            "streams": self.streams.snapshot(),
            "memory": {
                "peak_bytes": self.memory.peak,
                "peak_breakdown": self.memory.peak_breakdown,
            },
            "steps": [asdict(s) for s in self.steps],
        }

    def write(self, output_path: str | Path) -> Path:
        directory = Path(output_path) / STATS_DIR
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"worker-{self.rank}.json"
        path.write_text(json.dumps(self.to_json(), indent=2))
        return path


# ============================================
# JOB LEVEL
# ============================================

def merge_worker_stats(workers: list[dict], extra: Optional[dict] = None) -> dict:
    """
    Combine per-worker stats into one job record.

    Args:
        workers: Parsed worker-<r>.json contents
        extra: Job-level fields (wall time, command line, ...)

    Returns:
        Job stats dict with per-step totals
    """
    workers = sorted(workers, key=lambda w: w["rank"])
    by_step: dict[int, dict] = {}
    for worker in workers:
        for step in worker["steps"]:
            total = by_step.setdefault(step["superstep"], {
                "superstep": step["superstep"],
                "computed": 0,
                "messages": 0,
                "batches_sent": 0,
                "bytes_sent": 0,
                "merge_calls": 0,
                "max_busy_seconds": 0.0,
                "max_send_seconds": 0.0,
            })
            total["computed"] += step["computed"]
            total["messages"] += step["messages"]
            total["batches_sent"] += step["batches_sent"]
            total["bytes_sent"] += step["bytes_sent"]
            total["merge_calls"] += step["merge_calls"]
            total["max_busy_seconds"] = max(total["max_busy_seconds"], _span(step, "compute"))
            total["max_send_seconds"] = max(total["max_send_seconds"], _span(step, "send"))

    job = {
        "num_workers": len(workers),
        "mode": workers[0]["mode"] if workers else None,
        "algorithm": workers[0]["algorithm"] if workers else None,
        "num_vertices": sum(w["num_vertices"] for w in workers),
        "num_edges": sum(w["num_edges"] for w in workers),
        "supersteps": max((w["supersteps"] for w in workers), default=0),
        "peak_memory_bytes": max((w["memory"]["peak_bytes"] for w in workers), default=0),
        "steps": [by_step[i] for i in sorted(by_step)],
        "workers": workers,
    }
    if extra:
        job.update(extra)
    return job


def write_job_stats(output_path: str | Path, extra: Optional[dict] = None) -> dict:
    """Merge every worker-<r>.json under <out>/_stats into job.json."""
    directory = Path(output_path) / STATS_DIR
    workers = [json.loads(p.read_text()) for p in sorted(directory.glob("worker-*.json"))]
    job = merge_worker_stats(workers, extra)
    (directory / "job.json").write_text(json.dumps(job, indent=2))
    return job


def load_job_stats(output_path: str | Path) -> dict:
    path = Path(output_path) / STATS_DIR / "job.json"
    return json.loads(path.read_text())


def _span(step: dict, prefix: str) -> float:
    start = step.get(f"{prefix}_start")
    end = step.get(f"{prefix}_end")
    if start is None or end is None:
        return 0.0
    return end - start


def check_pass_bounds(job: dict) -> list[str]:
    """
    Verify the per-superstep I/O pass bounds from stats alone.

    Per worker and superstep: S^E read at most once, S^I read exactly once,
    merge passes within ceil(log_k(runs)), and no merge at all in recoded mode.

    Returns:
        Human-readable violations (empty when every bound holds)
    """
    violations = []
    for worker in job["workers"]:
        rank = worker["rank"]
        k = worker.get("merge_fanin", 1000)
        recoded = worker["mode"] == "recoded"
        for step in worker["steps"]:
            i = step["superstep"]
            if step["se_bytes_read"] > step["se_size"]:
                violations.append(
                    f"worker {rank} step {i}: read {step['se_bytes_read']} bytes of a "
                    f"{step['se_size']}-byte edge stream"
                )
            if step["si_bytes_read"] != step["si_size"]:
                violations.append(
                    f"worker {rank} step {i}: read {step['si_bytes_read']} bytes of a "
                    f"{step['si_size']}-byte incoming message stream"
                )
            if recoded and step["merge_calls"]:
                violations.append(f"worker {rank} step {i}: {step['merge_calls']} merges in recoded mode")
            bound = expected_passes(step["ims_runs"], k)
            if step["merge_passes"] > bound:
                violations.append(
                    f"worker {rank} step {i}: {step['merge_passes']} merge passes over "
                    f"{step['ims_runs']} runs (bound {bound})"
                )
    return violations


def check_overlap(job: dict) -> dict:
    """
    Evidence that computation overlaps transmission.

    Returns:
        {"overlapping_steps": [(rank, step), ...], "busy_below_wall": bool}
        where a listed step's compute interval intersects the previous
        step's send interval on the same worker.
    """
    overlapping = []
    busy_total = 0.0
    wall_total = 0.0
    for worker in job["workers"]:
        steps = {s["superstep"]: s for s in worker["steps"]}
        for i, step in steps.items():
            busy_total += _span(step, "compute")
            previous = steps.get(i - 1)
            if previous is None:
                continue
            if None in (step["compute_start"], step["compute_end"],
                        previous["send_start"], previous["send_end"]):
                continue
            if step["compute_start"] < previous["send_end"] and previous["send_start"] < step["compute_end"]:
                overlapping.append((worker["rank"], i))
        wall_total += worker["wall_seconds"]
    return {"overlapping_steps": overlapping, "busy_below_wall": busy_total < wall_total}
