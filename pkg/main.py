#!/usr/bin/env python3
"""
Main entry point for the stream-graph engine.
"""

import sys
from functools import wraps
from pathlib import Path
from typing import Optional

import click
from rich.console import Console
from rich.table import Table

from src.algorithms import ALGORITHMS
from src.cluster import make_program, put_graph, recode_graph, run_job
from src.config.settings import Settings, build_settings
from src.engine.stats import check_overlap, check_pass_bounds, load_job_stats
from src.models.manifest import GraphManifest
from src.oracle.compare import compare_outputs, read_output, remap_output
from src.oracle.engine import OracleGraph, oracle_run
from src.recode.preprocess import MAP_FILE, read_recode_map
from src.utils.errors import EngineError
from src.utils.logger import get_logger, setup_logger

logger = get_logger()
console = Console()


def job_options(command):
    """Options shared by every command that touches the store or a cluster."""
    options = [
        click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False),
                     default=None, help='Flat key=value config file (flags override it)'),
        click.option('--store', default=None, help='Shared store directory'),
        click.option('-n', '--workers', 'num_workers', type=int, default=None, help='Number of workers'),
        click.option('--transport', type=click.Choice(['sockets', 'sim']), default=None,
                     help='Worker processes over sockets, or threads over a simulated network'),
        click.option('--seed', type=int, default=None, help='Seed for simulated delivery delays'),
        click.option('--delay', 'sim_max_delay', type=float, default=None,
                     help='Max simulated per-batch delay in seconds'),
        click.option('--b', 'stream_buffer_b', type=int, default=None, help='Stream buffer size b (bytes)'),
        click.option('--B', 'split_size_B', type=int, default=None, help='Split size B (bytes)'),
        click.option('--k', 'merge_fanin_k', type=int, default=None, help='Merge fan-in k'),
        click.option('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def configure(config_file: Optional[str], **overrides) -> Settings:
    """Build settings from file + flags and set up logging for the driver."""
    settings = build_settings(config_file, **overrides)
    setup_logger(
        log_level=settings.log_level,
        log_to_file=settings.log_to_file,
        log_rotation=settings.log_rotation,
        log_retention_days=settings.log_retention_days,
        log_dir=settings.log_dir,
        role="driver",
    )
    return settings


def reports_errors(command):
    """Turn engine errors into a message and exit status 1."""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except EngineError as e:
            click.echo(f"\n❌ Error: {e}", err=True)
            logger.opt(exception=e).debug("Command failed")
            sys.exit(1)
    return wrapper


@click.group()
def cli():
    """Out-of-core vertex-centric graph engine (streams, not RAM)."""
    pass


# ============================================
# PUT
# ============================================

@cli.command()
@click.argument('input_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--store', default='store', help='Shared store directory')
@click.option('--weighted/--unweighted', default=False, help='Adjacency items carry edge weights')
@click.option('--directed/--undirected', default=None,
              help='Override the directed flag (detected from edge symmetry by default)')
@reports_errors
def put(input_file: str, store: str, weighted: bool, directed: Optional[bool]):
    """
    Validate a graph file and place it in the shared store.

    Examples:
        python main.py put graph.txt --store store
        python main.py put roads.txt --store store --weighted
    """
    setup_logger(role="driver")
    manifest = put_graph(input_file, store, weighted=weighted, directed=directed)

    click.echo("=" * 60)
    click.echo(f"📦 Stored {input_file} in {store}")
    click.echo(f"Vertices: {manifest.num_vertices}")
    click.echo(f"Edges: {manifest.num_edges}")
    click.echo(f"Directed: {'yes' if manifest.directed else 'no'}")
    click.echo(f"Weighted: {'yes' if manifest.weighted else 'no'}")
    click.echo("=" * 60)


# ============================================
# RECODE
# ============================================

@cli.command()
@job_options
@click.option('--force', is_flag=True, help='Recode again even if the graph was recoded')
@reports_errors
def recode(config_file, force, **flags):
    """
    Replace vertex ids by dense ids n*pos+rank for recoded-mode jobs.

    Examples:
        python main.py recode --store store -n 4
        python main.py recode --store store -n 8 --force
    """
    settings = configure(config_file, store_path=flags.pop('store'), **flags)

    click.echo("=" * 60)
    click.echo(f"🔢 Recoding {settings.store_path} for {settings.num_workers} workers")
    click.echo(f"Transport: {settings.transport.value}")
    click.echo("=" * 60)

    manifest = recode_graph(settings, force=force)

    info = manifest.recode
    click.echo(f"\n✅ Recoded in {info.wall_seconds:.2f}s (loading part: {info.load_seconds:.2f}s)")
    for step, count in sorted(info.messages.items()):
        click.echo(f"  {step}: {count} messages")


# ============================================
# RUN
# ============================================

@cli.command()
@click.argument('algorithm', type=click.Choice(sorted(ALGORITHMS), case_sensitive=False))
@job_options
@click.option('--mode', type=click.Choice(['normal', 'recoded']), default=None, help='Execution mode')
@click.option('--out', 'output_path', default=None, help='Output directory')
@click.option('--steps', type=int, default=None, help='PageRank supersteps')
@click.option('--source', type=int, default=None, help='SSSP source vertex id')
@click.option('--rounds', 'echo_rounds', type=int, default=None, help='Echo rounds')
@click.option('--max-supersteps', type=int, default=None, help='Safety cap on supersteps')
@click.option('--oracle', is_flag=True, help='Also run the in-memory oracle and compare')
@click.option('--tol', type=float, default=1e-12, help='Float tolerance for --oracle')
@reports_errors
def run(algorithm, config_file, oracle, tol, **flags):
    """
    Run a vertex program on the stored graph.

    Examples:
        python main.py run pagerank --steps 10 -n 4
        python main.py run pagerank --steps 10 --mode recoded -n 4
        python main.py run sssp --source 1 --transport sockets -n 2 --oracle
    """
    settings = configure(config_file, store_path=flags.pop('store'), **flags)

    click.echo("=" * 60)
    click.echo(f"🚀 Running {algorithm} on {settings.store_path}")
    click.echo(f"Workers: {settings.num_workers} ({settings.transport.value})")
    click.echo(f"Mode: {settings.mode.value}")
    click.echo(f"Buffers: b={settings.stream_buffer_b} B={settings.split_size_B} k={settings.merge_fanin_k}")
    click.echo("=" * 60)

    result = run_job(settings, algorithm, extra={"command": " ".join(sys.argv[1:])})
    job = result.stats

    click.echo(f"\n🏁 {job['supersteps']} supersteps in {result.wall_seconds:.2f}s")
    click.echo(f"Output: {result.output_path}")
    click.echo(f"Peak tracked memory: {job['peak_memory_bytes']} bytes per worker (max)")
    violations = check_pass_bounds(job)
    if violations:
        click.echo(f"⚠️  {len(violations)} I/O pass bound violations (see `stats`)")

    if oracle:
        manifest = GraphManifest.load(settings.store_path)
        graph = OracleGraph.from_text(manifest.graph_path(settings.store_path), manifest.weighted)
        program = make_program(settings, manifest, algorithm)
        expected = oracle_run(graph, program, settings.max_supersteps)
        oracle_dir = Path(settings.output_path) / "_oracle"
        expected.write(oracle_dir, program)
        report = compare_outputs(read_output(result.output_path), read_output(oracle_dir), tol)
        click.echo(f"\n🔍 Oracle: {report}")
        for vertex_id, actual, wanted in report.examples:
            click.echo(f"  vertex {vertex_id}: got {actual}, expected {wanted}")
        if not report.ok:
            sys.exit(1)


# ============================================
# VERIFY
# ============================================

@cli.command()
@click.argument('output_path', type=click.Path(exists=True))
@click.argument('expected_path', type=click.Path(exists=True))
@click.option('--tol', type=float, default=0.0, help='Float tolerance (absolute and relative)')
@click.option('--partition', is_flag=True, help='Compare the groupings induced by the values')
@click.option('--map', 'map_file', type=click.Path(exists=True), default=None,
              help=f'Translate OUTPUT ids through a {MAP_FILE} (old<TAB>new) file')
def verify(output_path, expected_path, tol, partition, map_file):
    """
    Compare two result directories (or files) by vertex id.

    Examples:
        python main.py verify output/ expected/
        python main.py verify output/ expected/ --tol 1e-12
        python main.py verify output/ expected/ --partition
    """
    setup_logger(role="driver")
    try:
        actual = read_output(output_path)
        expected = read_output(expected_path)
    except EngineError as e:
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(1)
    if map_file:
        actual = remap_output(actual, read_recode_map(map_file))

    report = compare_outputs(actual, expected, tol, as_partition=partition)

    click.echo("=" * 60)
    click.echo(f"🔍 {report}")
    click.echo("=" * 60)
    for vertex_id, got, wanted in report.examples:
        click.echo(f"  vertex {vertex_id}: got {got}, expected {wanted}")
    if report.missing:
        click.echo(f"  missing ids (first): {report.missing[:10]}")
    if report.extra:
        click.echo(f"  extra ids (first): {report.extra[:10]}")
    sys.exit(0 if report.ok else 1)


# ============================================
# STATS
# ============================================

@cli.command()
@click.argument('output_path', type=click.Path(exists=True, file_okay=False))
@click.option('--workers/--no-workers', 'show_workers', default=False, help='Per-worker table too')
def stats(output_path, show_workers):
    """
    Show the instrumentation of a finished job.

    Examples:
        python main.py stats output/
        python main.py stats store/_recode --workers
    """
    try:
        job = load_job_stats(output_path)
    except FileNotFoundError:
        click.echo(f"❌ No job stats under {output_path}", err=True)
        sys.exit(1)

    console.rule(f"📊 {job.get('algorithm') or job.get('task')} | {job['num_workers']} workers | {job.get('mode')}")
    console.print(
        f"|V|={job['num_vertices']}  |E|={job['num_edges']}  supersteps={job['supersteps']}  "
        f"wall={job.get('wall_seconds', 0.0):.3f}s  peak memory={job['peak_memory_bytes']} B"
    )

    if job["steps"]:
        table = Table(title="Supersteps")
        for column in ("step", "computed", "messages", "batches", "bytes sent",
                       "merges", "max busy s", "max send s"):
            table.add_column(column, justify="right")
        for step in job["steps"]:
            table.add_row(
                str(step["superstep"]), str(step["computed"]), str(step["messages"]),
                str(step["batches_sent"]), str(step["bytes_sent"]), str(step["merge_calls"]),
                f"{step['max_busy_seconds']:.4f}", f"{step['max_send_seconds']:.4f}",
            )
        console.print(table)

    if show_workers:
        table = Table(title="Workers")
        for column in ("rank", "vertices", "edges", "wall s", "peak memory", "SE read", "OMS written"):
            table.add_column(column, justify="right")
        for worker in job["workers"]:
            streams = worker["streams"]
            table.add_row(
                str(worker["rank"]), str(worker["num_vertices"]), str(worker["num_edges"]),
                f"{worker['wall_seconds']:.3f}", str(worker["memory"]["peak_bytes"]),
                str(streams.get("SE", {}).get("bytes_read", 0)),
                str(streams.get("OMS", {}).get("bytes_written", 0)),
            )
        console.print(table)

    violations = check_pass_bounds(job)
    if violations:
        console.print(f"[red]❌ {len(violations)} I/O pass bound violations[/red]")
        for line in violations[:20]:
            console.print(f"  {line}")
    else:
        console.print("[green]✓ I/O pass bounds hold for every worker and superstep[/green]")

    overlap = check_overlap(job)
    console.print(
        f"Overlap: {len(overlap['overlapping_steps'])} (worker, step) pairs computed while the "
        f"previous step was still sending; busy < wall: {overlap['busy_below_wall']}"
    )


if __name__ == '__main__':
    cli()
