"""
Data models describing a graph placed in the shared store.
"""

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional

from ..utils.errors import ConfigError

MANIFEST_NAME = "manifest.json"
GRAPH_FILE = "graph.txt"


@dataclass
class RecodeInfo:
    """Outcome of an ID-recoding pass over a stored graph."""
    num_workers: int
    wall_seconds: float
    load_seconds: float
    messages: dict[str, int] = field(default_factory=dict)
    timestamp: datetime = field(default_factory=datetime.now)

    def total_messages(self) -> int:
        return sum(self.messages.values())


@dataclass
class GraphManifest:
    """What `put` learned about a graph; recoding adds `recode`."""
    num_vertices: int
    num_edges: int
    directed: bool
    weighted: bool
    source_file: str
    graph_file: str = GRAPH_FILE
    max_id: int = 0
    timestamp: datetime = field(default_factory=datetime.now)
    recode: Optional[RecodeInfo] = None

    def graph_path(self, store: str | Path) -> Path:
        return Path(store) / self.graph_file

    def to_json(self) -> dict:
        data = asdict(self)
        data["timestamp"] = self.timestamp.isoformat()
        if self.recode is not None:
            data["recode"]["timestamp"] = self.recode.timestamp.isoformat()
        return data

    @classmethod
    def from_json(cls, data: dict) -> "GraphManifest":
        recode = data.get("recode")
        if recode is not None:
            recode = RecodeInfo(
                num_workers=int(recode["num_workers"]),
                wall_seconds=float(recode["wall_seconds"]),
                load_seconds=float(recode.get("load_seconds", 0.0)),
                messages={k: int(v) for k, v in recode.get("messages", {}).items()},
                timestamp=datetime.fromisoformat(recode["timestamp"]),
            )
        return cls(
            num_vertices=int(data["num_vertices"]),
            num_edges=int(data["num_edges"]),
            directed=bool(data["directed"]),
            weighted=bool(data["weighted"]),
            source_file=data.get("source_file", ""),
            graph_file=data.get("graph_file", GRAPH_FILE),
            max_id=int(data.get("max_id", 0)),
            timestamp=datetime.fromisoformat(data["timestamp"]),
            recode=recode,
        )

    def save(self, store: str | Path) -> Path:
        path = Path(store) / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=2))
        return path

    @classmethod
    def load(cls, store: str | Path) -> "GraphManifest":
        path = Path(store) / MANIFEST_NAME
        if not path.is_file():
            raise ConfigError(f"No graph in store {store} (missing {MANIFEST_NAME}); run `put` first")
        return cls.from_json(json.loads(path.read_text()))

    def __str__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        weights = "weighted" if self.weighted else "unweighted"
        return f"|V|={self.num_vertices} |E|={self.num_edges} ({kind}, {weights})"
