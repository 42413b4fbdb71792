"""
Logging configuration using Loguru.
Provides structured logging with file rotation and console output.
"""

import sys
from pathlib import Path
from loguru import logger
from typing import Optional


logger.configure(extra={"worker": "-"})


def setup_logger(
    log_level: str = "INFO",
    log_to_file: bool = False,
    log_rotation: str = "daily",
    log_retention_days: int = 7,
    log_dir: str = "logs",
    role: str = "driver"
) -> None:
    """
    Configure the global logger instance.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_to_file: Whether to log to files
        log_rotation: File rotation strategy (daily, weekly, or size like "10 MB")
        log_retention_days: Number of days to keep old logs
        log_dir: Directory for log files
        role: Process role shown in every line (driver, worker-3, ...)
    """
    logger.remove()
    logger.configure(extra={"worker": "-"})

    console_format = (
        "<green>{time:HH:mm:ss.SSS}</green> | "
        "<level>{level: <8}</level> | "
        f"<yellow>{role}</yellow> "
        "<magenta>w{extra[worker]}</magenta> | "
        "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
        "<level>{message}</level>"
    )

    file_format = (
        "{time:YYYY-MM-DD HH:mm:ss.SSS} | "
        "{level: <8} | "
        f"{role} w{{extra[worker]}} | "
        "{name}:{function}:{line} | "
        "{message}"
    )

    logger.add(
        sys.stderr,
        format=console_format,
        level=log_level,
        colorize=True,
        backtrace=True,
        diagnose=False
    )

    if log_to_file:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)

        if log_rotation == "daily":
            rotation = "00:00"
        elif log_rotation == "weekly":
            rotation = "1 week"
        else:
            rotation = log_rotation

        logger.add(
            log_path / f"{role}_{{time:YYYY-MM-DD}}.log",
            format=file_format,
            level=log_level,
            rotation=rotation,
            retention=f"{log_retention_days} days",
            compression="zip",
            enqueue=True,
            backtrace=True,
            diagnose=False
        )

        logger.add(
            log_path / "errors_{time:YYYY-MM-DD}.log",
            format=file_format,
            level="ERROR",
            rotation=rotation,
            retention=f"{log_retention_days} days",
            compression="zip",
            enqueue=True,
            backtrace=True,
            diagnose=False
        )

        # Superstep summaries, kept apart so a run can be replayed step by step
        logger.add(
            log_path / "supersteps_{time:YYYY-MM-DD}.log",
            format=file_format,
            level="INFO",
            rotation=rotation,
            retention=f"{log_retention_days * 2} days",
            compression="zip",
            enqueue=True,
            filter=lambda record: "SUPERSTEP" in record["extra"]
        )

    logger.debug(f"Logger initialized with level={log_level}, role={role}")


def get_logger(worker: Optional[int] = None):
    """
    Get the configured logger instance.

    Args:
        worker: Worker rank to bind to every record, if any

    Returns:
        The global logger, bound to the worker when given
    """
    if worker is None:
        return logger
    return logger.bind(worker=worker)


def log_superstep(
    worker: int,
    superstep: int,
    computed: int,
    messages: int,
    wall_seconds: float,
    busy_seconds: float,
    details: Optional[dict] = None
) -> None:
    """
    Log the end of a compute pass with structured information.

    Args:
        worker: Worker rank
        superstep: Superstep number
        computed: Number of compute() calls
        messages: Messages generated
        wall_seconds: Time from permit to the end of the pass
        busy_seconds: Time spent inside the compute pass
        details: Additional fields to bind
    """
    log_data = {
        "superstep": superstep,
        "computed": computed,
        "messages": messages,
        "wall_seconds": wall_seconds,
        "busy_seconds": busy_seconds,
    }
    if details:
        log_data.update(details)

    logger.bind(SUPERSTEP=True, worker=worker, **log_data).info(
        f"SUPERSTEP {superstep} | computed: {computed} | messages: {messages} | "
        f"busy: {busy_seconds:.3f}s | wall: {wall_seconds:.3f}s"
    )


def log_batch(
    worker: int,
    direction: str,
    peer: int,
    superstep: int,
    kind: str,
    num_bytes: int
) -> None:
    """
    Log one transmitted or received batch (debug level).

    Args:
        worker: Worker rank
        direction: "send" or "recv"
        peer: Peer worker rank
        superstep: Superstep stamped on the batch
        kind: Batch kind name
        num_bytes: Payload length
    """
    arrow = "->" if direction == "send" else "<-"
    logger.bind(worker=worker).debug(
        f"BATCH | {kind} | step {superstep} | w{worker} {arrow} w{peer} | {num_bytes} bytes"
    )


def log_io_summary(worker: int, superstep: int, counters: dict) -> None:
    """
    Log per-stream byte counters for a superstep.

    Args:
        worker: Worker rank
        superstep: Superstep number
        counters: Mapping of stream role -> counter dict
    """
    parts = []
    for role, values in sorted(counters.items()):
        parts.append(
            f"{role}: r={values.get('bytes_read', 0)} w={values.get('bytes_written', 0)}"
        )
    logger.bind(worker=worker).debug(f"IO step {superstep} | " + " | ".join(parts))


def log_recode_step(worker: int, step: int, messages: int, description: str) -> None:
    """
    Log progress of the ID-recoding preprocessing.

    Args:
        worker: Worker rank
        step: Preprocessing superstep (1-3)
        messages: Messages sent in the step
        description: What the step did
    """
    logger.bind(worker=worker).info(
        f"RECODE step {step} | {description} | messages: {messages}"
    )
