"""Application configuration: dataclasses plus a JSON config-file loader.

Config files are plain JSON with one object per section:

    {
      "backend":  {"kind": "mock", "endpoint": null, "temperature": 0.0,
                   "safety": [["harassment", "block_some"]]},
      "condense": {"threshold": 0.8, "strategy": "extractive"},
      "ingest":   {"decoder_cmd": "ffmpeg -i {input} ..."},
      "store":    {"root": "./store"},
      "service":  {"port": 8000}
    }

Every key is optional; omitted keys take the defaults below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .captioning import BackendConfig


@dataclass(frozen=True)
class CondenseConfig:
    threshold: float = 0.80
    strategy: str = "extractive"
    max_lines: int = 100

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0,1], got {self.threshold}")
        if self.strategy not in ("extractive", "abstractive"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class IngestConfig:
    decoder_cmd: str | None = None
    default_fps: float = 1.0
    keep_frames: bool = False


@dataclass(frozen=True)
class StoreOptions:
    root: str = "./store"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    job_workers: int = 2


@dataclass(frozen=True)
class AppConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    condense: CondenseConfig = field(default_factory=CondenseConfig)
    ingest: IngestConfig = field(default_factory=IngestConfig)
    store: StoreOptions = field(default_factory=StoreOptions)
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def with_store_root(self, root: str) -> "AppConfig":
        return AppConfig(
            backend=self.backend,
            condense=self.condense,
            ingest=self.ingest,
            store=StoreOptions(root=root),
            service=self.service,
        )


def _backend_from_dict(raw: dict) -> BackendConfig:
    safety = tuple((c, t) for c, t in raw.get("safety", []))
    known = {k: v for k, v in raw.items() if k != "safety"}
    return BackendConfig(safety=safety, **known)


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load an AppConfig from a JSON file; None gives all defaults."""
    if path is None:
        return AppConfig()
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return AppConfig(
        backend=_backend_from_dict(raw.get("backend", {})),
        condense=CondenseConfig(**raw.get("condense", {})),
        ingest=IngestConfig(**raw.get("ingest", {})),
        store=StoreOptions(**raw.get("store", {})),
        service=ServiceConfig(**raw.get("service", {})),
    )
