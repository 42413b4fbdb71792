"""
Job configuration for the out-of-core graph engine.
Uses Pydantic for validation and type checking.
"""

from enum import Enum
from pathlib import Path
from typing import Any, List, Optional, Tuple

from dotenv import dotenv_values
from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..utils.errors import ConfigError


class ExecutionMode(str, Enum):
    """How vertex ids map to workers and how messages are grouped."""
    NORMAL = "normal"
    RECODED = "recoded"


class TransportKind(str, Enum):
    """Which transport carries batches between workers."""
    SOCKETS = "sockets"
    SIMULATED = "sim"


class Settings(BaseSettings):
    """Main configuration class for a graph job (the JobConfig record)."""

    model_config = SettingsConfigDict(
        env_prefix="STREAMGRAPH_",
        case_sensitive=False,
        extra="ignore",
        use_enum_values=False
    )

    # ============================================
    # CLUSTER
    # ============================================
    num_workers: int = Field(
        default=4,
        ge=1,
        le=999,
        description="Number of workers |W|"
    )
    transport: TransportKind = Field(
        default=TransportKind.SIMULATED,
        description="sockets (one process per worker) or sim (threads, seeded delays)"
    )
    base_port: int = Field(
        default=47100,
        ge=1024,
        le=65000,
        description="First TCP port when worker_addresses is not given"
    )
    worker_addresses: Optional[str] = Field(
        default=None,
        description="Comma-separated host:port per worker (socket transport)"
    )
    max_in_flight: int = Field(
        default=4,
        ge=1,
        description="Bounded in-flight batches per channel"
    )
    seed: int = Field(
        default=0,
        description="Seed for simulated delivery delays"
    )
    sim_max_delay: float = Field(
        default=0.0,
        ge=0,
        description="Upper bound of a simulated per-batch delay (seconds)"
    )

    # ============================================
    # STREAMS
    # ============================================
    stream_buffer_b: int = Field(
        default=65536,
        gt=0,
        description="Stream buffer size b (bytes)"
    )
    split_size_B: int = Field(
        default=8388608,
        gt=0,
        description="Splittable stream file size bound (bytes)"
    )
    merge_fanin_k: int = Field(
        default=1000,
        ge=2,
        description="Fan-in k of the external merge-sort"
    )

    # ============================================
    # JOB
    # ============================================
    mode: ExecutionMode = Field(
        default=ExecutionMode.NORMAL,
        description="normal or recoded"
    )
    store_path: str = Field(
        default="store",
        description="Shared store directory (stands in for the distributed file system)"
    )
    scratch_dir: Optional[str] = Field(
        default=None,
        description="Local scratch root; defaults to <store>/scratch"
    )
    output_path: str = Field(
        default="output",
        description="Directory receiving part-<worker> result files"
    )
    max_supersteps: int = Field(
        default=10000,
        ge=1,
        description="Safety cap on the number of supersteps"
    )

    # ============================================
    # ALGORITHM PARAMETERS
    # ============================================
    steps: int = Field(
        default=10,
        ge=1,
        description="PageRank supersteps"
    )
    source: int = Field(
        default=0,
        ge=0,
        description="Source vertex id for SSSP"
    )
    echo_rounds: int = Field(
        default=1,
        ge=1,
        description="Rounds of the echo program"
    )

    # ============================================
    # LOGGING
    # ============================================
    log_level: str = Field(
        default="INFO",
        description="Log level (DEBUG, INFO, WARNING, ERROR)"
    )
    log_to_file: bool = Field(
        default=False,
        description="Enable file logging"
    )
    log_dir: str = Field(
        default="logs",
        description="Directory for log files"
    )
    log_rotation: str = Field(
        default="daily",
        description="Log file rotation (daily, weekly, or size in MB)"
    )
    log_retention_days: int = Field(
        default=7,
        ge=1,
        description="Keep logs for N days"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is one of the accepted values."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v.upper()

    @field_validator("worker_addresses")
    @classmethod
    def validate_addresses(cls, v: Optional[str]) -> Optional[str]:
        """Validate host:port list format."""
        if v is None or not v.strip():
            return None
        for entry in v.split(","):
            host, sep, port = entry.strip().rpartition(":")
            if not sep or not host or not port.isdigit():
                raise ValueError(f"Invalid worker address '{entry}', expected host:port")
        return v

    @model_validator(mode="after")
    def validate_buffers(self) -> "Settings":
        """Splittable files must hold at least one stream buffer."""
        if self.split_size_B < self.stream_buffer_b:
            raise ValueError(
                f"split_size_B ({self.split_size_B}) must be >= "
                f"stream_buffer_b ({self.stream_buffer_b})"
            )
        if self.worker_addresses is not None:
            count = len(self.worker_addresses.split(","))
            if count != self.num_workers:
                raise ValueError(
                    f"worker_addresses lists {count} workers but num_workers={self.num_workers}"
                )
        return self

    def check_record_size(self, largest_record: int) -> None:
        """
        Reject buffers too small for the records of the bound algorithm.

        Args:
            largest_record: Serialized size of the largest fixed-size record
        """
        if self.stream_buffer_b < largest_record:
            raise ConfigError(
                f"stream_buffer_b={self.stream_buffer_b} is smaller than a "
                f"{largest_record}-byte record"
            )

    def addresses(self) -> List[Tuple[str, int]]:
        """Resolve (host, port) for every worker."""
        if self.worker_addresses:
            result = []
            for entry in self.worker_addresses.split(","):
                host, _, port = entry.strip().rpartition(":")
                result.append((host, int(port)))
            return result
        return [("127.0.0.1", self.base_port + rank) for rank in range(self.num_workers)]

    def scratch_root(self) -> Path:
        """Root of the per-worker local scratch directories."""
        if self.scratch_dir:
            return Path(self.scratch_dir)
        return Path(self.store_path) / "scratch"

    def worker_scratch(self, rank: int) -> Path:
        """Scratch directory of one worker."""
        return self.scratch_root() / str(rank)


def load_config_file(path: str | Path) -> dict[str, Any]:
    """
    Read a flat key=value config file (one key per line, '#' comments).

    Args:
        path: Config file path

    Returns:
        Mapping of field names (matched case-insensitively) to raw string values
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {config_path}")
    field_names = {name.lower(): name for name in Settings.model_fields}
    result: dict[str, Any] = {}
    for key, value in dotenv_values(config_path).items():
        if value is None:
            continue
        result[field_names.get(key.lower(), key.lower())] = value
    return result


def build_settings(config_file: Optional[str] = None, **overrides: Any) -> Settings:
    """
    Build settings from a config file and CLI overrides.

    CLI overrides win over the file, the file wins over environment variables.

    Args:
        config_file: Optional key=value file
        **overrides: Values from command-line flags (None values are ignored)

    Returns:
        Validated Settings
    """
    values: dict[str, Any] = {}
    if config_file:
        values.update(load_config_file(config_file))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return Settings(**values)
    except ValueError as e:
        raise ConfigError(str(e)) from e


# Global settings instance
settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get or create the global settings instance.
    This function ensures settings are loaded only once.
    """
    global settings
    if settings is None:
        settings = Settings()
    return settings


def reload_settings(config_file: Optional[str] = None, **overrides: Any) -> Settings:
    """
    Reload settings from a config file, overrides and the environment.
    Useful for testing or when the CLI has parsed its flags.
    """
    global settings
    settings = build_settings(config_file, **overrides)
    return settings
