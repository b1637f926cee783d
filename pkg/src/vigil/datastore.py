"""Append-only text-log store: the pipeline's database.

Records are one JSON object per line in UTF-8 NDJSON files laid out as:

    <root>/manifest.json
    <root>/captions/<camera_id>/<YYYY-MM-DD>.ndjson
    <root>/segments/<camera_id>/<YYYY-MM-DD>.ndjson
    <root>/summaries/<camera_id>.ndjson
    <root>/network/summaries.ndjson

Each line is an envelope {kind, camera_id, appended_at_ms, payload} whose
payload carries the domain value's fields verbatim. appended_at_ms is the
record's own event time (caption wall-clock, segment start, summary window
start), not the write-call wall clock — that keeps reruns byte-identical
and makes the daily partitioning match the footage, so windowed scans only
touch the days they need.

Corrupt lines are never skipped silently: scans raise ParseError naming the
file and line.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass
from datetime import date, datetime, timezone
from pathlib import Path

from .captioning import Caption
from .condense import CameraSummary, CompressionStats, Segment
from .errors import IoFailure, ParseError, UnknownCamera
from .fusion import NetworkSummary

RECORD_KINDS = ("caption", "segment", "camera_summary", "network_summary")

_MS_PER_DAY = 86_400_000


@dataclass(frozen=True)
class CameraInfo:
    """Manifest entry for one registered camera."""

    name: str
    location_label: str
    base_epoch_ms: int
    source_bytes: int = 0  # 0 = unknown (metadata-only ingest without a declared size)


@dataclass(frozen=True)
class StoredRecord:
    kind: str
    camera_id: str
    payload: Caption | Segment | CameraSummary | NetworkSummary
    appended_at_ms: int


@dataclass(frozen=True)
class StoreStats:
    per_camera: dict[str, CompressionStats]
    total: CompressionStats
    unknown_sources: tuple[str, ...]


def _encode_payload(payload) -> dict:
    return asdict(payload)


def _decode_payload(kind: str, data: dict):
    if kind == "caption":
        return Caption(**data)
    if kind == "segment":
        return Segment(**data)
    if kind == "camera_summary":
        return CameraSummary(
            camera_id=data["camera_id"],
            window=tuple(data["window"]),
            lines=tuple((ln[0], ln[1], ln[2]) for ln in data["lines"]),
            strategy=data["strategy"],
            model_id=data.get("model_id"),
        )
    if kind == "network_summary":
        return NetworkSummary(
            window=tuple(data["window"]),
            lines=tuple((ln[0], ln[1], ln[2], ln[3]) for ln in data["lines"]),
            strategy=data["strategy"],
            model_id=data.get("model_id"),
        )
    raise ValueError(f"unknown record kind {kind!r}")


def serialize_record(record: StoredRecord) -> str:
    """One compact, key-sorted JSON line (no trailing newline)."""
    return json.dumps(
        {
            "kind": record.kind,
            "camera_id": record.camera_id,
            "appended_at_ms": record.appended_at_ms,
            "payload": _encode_payload(record.payload),
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def parse_record(line: str) -> StoredRecord:
    envelope = json.loads(line)
    return StoredRecord(
        kind=envelope["kind"],
        camera_id=envelope["camera_id"],
        payload=_decode_payload(envelope["kind"], envelope["payload"]),
        appended_at_ms=envelope["appended_at_ms"],
    )


def _utc_date(epoch_ms: int) -> str:
    return datetime.fromtimestamp(epoch_ms // 1000, tz=timezone.utc).date().isoformat()


class Store:
    """Filesystem-backed record store for one camera network."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[Path, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self.manifest: dict[str, CameraInfo] = {}
        self._load_manifest()

    # -- manifest ----------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def _load_manifest(self) -> None:
        if not self.manifest_path.exists():
            return
        try:
            raw = json.loads(self.manifest_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IoFailure(f"cannot read manifest: {exc}") from exc
        self.manifest = {cam: CameraInfo(**info) for cam, info in raw.items()}

    def _write_manifest(self) -> None:
        payload = {cam: asdict(info) for cam, info in sorted(self.manifest.items())}
        try:
            self.manifest_path.write_text(
                json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
                encoding="utf-8",
            )
        except OSError as exc:
            raise IoFailure(f"cannot write manifest: {exc}") from exc

    def register_camera(
        self,
        camera_id: str,
        name: str = "",
        location_label: str = "",
        base_epoch_ms: int = 0,
        source_bytes: int = 0,
    ) -> CameraInfo:
        if not camera_id or camera_id == "network":
            raise ValueError(f"invalid camera_id {camera_id!r}")
        info = CameraInfo(
            name=name or camera_id,
            location_label=location_label,
            base_epoch_ms=base_epoch_ms,
            source_bytes=source_bytes,
        )
        self.manifest[camera_id] = info
        self._write_manifest()
        return info

    def camera(self, camera_id: str) -> CameraInfo:
        if camera_id not in self.manifest:
            raise UnknownCamera(f"camera {camera_id!r} not registered")
        return self.manifest[camera_id]

    # -- paths ---------------------------------------------------------------

    def _record_path(self, kind: str, camera_id: str, appended_at_ms: int) -> Path:
        if kind == "caption":
            return self.root / "captions" / camera_id / f"{_utc_date(appended_at_ms)}.ndjson"
        if kind == "segment":
            return self.root / "segments" / camera_id / f"{_utc_date(appended_at_ms)}.ndjson"
        if kind == "camera_summary":
            return self.root / "summaries" / f"{camera_id}.ndjson"
        if kind == "network_summary":
            return self.root / "network" / "summaries.ndjson"
        raise ValueError(f"unknown record kind {kind!r}")

    def _lock_for(self, path: Path) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(path, threading.Lock())

    # -- append ----------------------------------------------------------------

    def append_record(self, record: StoredRecord) -> Path:
        """Append one record as a single whole-line write; returns the log file."""
        if record.kind not in RECORD_KINDS:
            raise ValueError(f"unknown record kind {record.kind!r}")
        if record.kind == "network_summary":
            if record.camera_id != "network":
                raise ValueError("network_summary records belong to camera_id 'network'")
        elif record.camera_id not in self.manifest:
            raise UnknownCamera(f"camera {record.camera_id!r} not registered")
        path = self._record_path(record.kind, record.camera_id, record.appended_at_ms)
        line = (serialize_record(record) + "\n").encode("utf-8")
        lock = self._lock_for(path)
        try:
            with lock:
                path.parent.mkdir(parents=True, exist_ok=True)
                with path.open("ab") as fh:
                    fh.write(line)
                    fh.flush()
        except OSError as exc:
            raise IoFailure(f"append to {path} failed: {exc}") from exc
        return path

    def append_caption(self, caption: Caption) -> Path:
        base = self.camera(caption.camera_id).base_epoch_ms
        return self.append_record(
            StoredRecord(
                kind="caption",
                camera_id=caption.camera_id,
                payload=caption,
                appended_at_ms=base + caption.offset_ms,
            )
        )

    def append_segment(self, segment: Segment) -> Path:
        return self.append_record(
            StoredRecord(
                kind="segment",
                camera_id=segment.camera_id,
                payload=segment,
                appended_at_ms=segment.start_ms,
            )
        )

    def append_camera_summary(self, summary: CameraSummary) -> Path:
        return self.append_record(
            StoredRecord(
                kind="camera_summary",
                camera_id=summary.camera_id,
                payload=summary,
                appended_at_ms=summary.window[0],
            )
        )

    def append_network_summary(self, summary: NetworkSummary) -> Path:
        return self.append_record(
            StoredRecord(
                kind="network_summary",
                camera_id="network",
                payload=summary,
                appended_at_ms=summary.window[0],
            )
        )

    # -- scan ---------------------------------------------------------------

    def _log_files(
        self, kind: str, camera_id: str | None, from_ms: int | None, to_ms: int | None
    ) -> list[Path]:
        if kind == "network_summary":
            path = self.root / "network" / "summaries.ndjson"
            return [path] if path.exists() else []
        if kind == "camera_summary":
            base = self.root / "summaries"
            if not base.exists():
                return []
            if camera_id is not None:
                path = base / f"{camera_id}.ndjson"
                return [path] if path.exists() else []
            return sorted(base.glob("*.ndjson"))
        base = self.root / ("captions" if kind == "caption" else "segments")
        if not base.exists():
            return []
        camera_dirs = (
            [base / camera_id]
            if camera_id is not None
            else sorted(d for d in base.iterdir() if d.is_dir())
        )
        from_day = None if from_ms is None else from_ms // _MS_PER_DAY
        to_day = None if to_ms is None else to_ms // _MS_PER_DAY
        files: list[Path] = []
        for cam_dir in camera_dirs:
            if not cam_dir.exists():
                continue
            for path in sorted(cam_dir.glob("*.ndjson")):
                try:
                    day = (date.fromisoformat(path.stem) - date(1970, 1, 1)).days
                except ValueError:
                    files.append(path)
                    continue
                if from_day is not None and day < from_day:
                    continue
                if to_day is not None and day > to_day:
                    continue
                files.append(path)
        return files

    def scan_records(
        self,
        kind: str,
        camera_id: str | None = None,
        from_ms: int | None = None,
        to_ms: int | None = None,
    ) -> list[StoredRecord]:
        """All records of a kind matching the filters, ordered by (time, camera)."""
        if kind not in RECORD_KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        records: list[StoredRecord] = []
        for path in self._log_files(kind, camera_id, from_ms, to_ms):
            try:
                content = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise IoFailure(f"cannot read {path}: {exc}") from exc
            for line_no, line in enumerate(content.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    record = parse_record(line)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ParseError(
                        f"{path}:{line_no}: corrupt record ({exc})",
                        path=str(path),
                        line_no=line_no,
                    ) from exc
                if from_ms is not None and record.appended_at_ms < from_ms:
                    continue
                if to_ms is not None and record.appended_at_ms > to_ms:
                    continue
                records.append(record)
        records.sort(key=lambda r: (r.appended_at_ms, r.camera_id))
        return records

    def scan(
        self,
        kind: str,
        camera_id: str | None = None,
        from_ms: int | None = None,
        to_ms: int | None = None,
    ) -> list:
        """Like scan_records but returns the domain payloads."""
        return [r.payload for r in self.scan_records(kind, camera_id, from_ms, to_ms)]

    # -- stats ----------------------------------------------------------------

    def _dir_bytes(self, *paths: Path) -> int:
        total = 0
        for path in paths:
            if path.is_dir():
                total += sum(f.stat().st_size for f in path.rglob("*") if f.is_file())
            elif path.is_file():
                total += path.stat().st_size
        return total

    def store_stats(self) -> StoreStats:
        """On-disk text bytes per camera and overall, against declared source sizes.

        caption_bytes counts the raw caption logs; summary_bytes counts the
        condensed outputs (segment logs plus summaries, and for the total the
        network summaries too). Cameras without a declared source size get
        byte counts with ratio None and are reported in unknown_sources.
        """
        per_camera: dict[str, CompressionStats] = {}
        unknown: list[str] = []
        total_source = total_captions = total_summaries = 0
        for camera_id, info in sorted(self.manifest.items()):
            caption_bytes = self._dir_bytes(self.root / "captions" / camera_id)
            summary_bytes = self._dir_bytes(
                self.root / "segments" / camera_id,
                self.root / "summaries" / f"{camera_id}.ndjson",
            )
            ratio = None
            if info.source_bytes > 0:
                ratio = (caption_bytes + summary_bytes) / info.source_bytes
                total_source += info.source_bytes
            else:
                unknown.append(camera_id)
            per_camera[camera_id] = CompressionStats(
                source_bytes=info.source_bytes,
                caption_bytes=caption_bytes,
                summary_bytes=summary_bytes,
                ratio=ratio,
            )
            total_captions += caption_bytes
            total_summaries += summary_bytes
        total_summaries += self._dir_bytes(self.root / "network" / "summaries.ndjson")
        total = CompressionStats(
            source_bytes=total_source,
            caption_bytes=total_captions,
            summary_bytes=total_summaries,
            ratio=(
                (total_captions + total_summaries) / total_source
                if total_source > 0
                else None
            ),
        )
        return StoreStats(
            per_camera=per_camera, total=total, unknown_sources=tuple(unknown)
        )
