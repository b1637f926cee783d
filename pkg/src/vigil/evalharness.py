"""Automated temporal and spatial consistency metrics on scripted scenarios.

A scenario script declares, per camera, which events happen when and which
keywords identify each event. The harness turns the script into frames
manifests, runs the full pipeline with the mock backend, and measures how
faithfully the stored summaries reproduce the script:

* event_recall          — fraction of scripted events whose keywords all
                          appear in some summary line
* ordering_tau          — Kendall rank correlation between scripted event
                          order and the order of their first-matching lines
* transition_accuracy   — fraction of scripted cross-camera handoffs the
                          fused timeline orders correctly
* dedup_ratio           — captions stored per segment stored
* compression           — stored text bytes vs declared source bytes

Within each event group, cross-camera transitions are matched by the
event's keyword set appearing verbatim in fused timeline text.
"""

from __future__ import annotations

import json
import shutil
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .condense import CameraSummary, CompressionStats, normalize_tokens
from .config import AppConfig
from .datastore import Store
from .errors import JobAborted, OverlappingEvents
from .fusion import merge_timeline
from .ingest import SamplingPolicy, VideoSource, plan_samples
from .pipeline import run_pipeline

DEFAULT_BACKGROUND = "empty scene"


@dataclass(frozen=True)
class ScriptEvent:
    t_start_ms: int
    t_end_ms: int
    caption: str
    keywords: tuple[str, ...]

    def keyword_tokens(self) -> frozenset[str]:
        return frozenset(normalize_tokens(" ".join(self.keywords)))


@dataclass(frozen=True)
class ScriptCamera:
    camera_id: str
    base_epoch_ms: int
    duration_ms: int
    events: tuple[ScriptEvent, ...]
    source_bytes: int = 0


@dataclass(frozen=True)
class ScenarioScript:
    cameras: tuple[ScriptCamera, ...]
    background_caption: str = DEFAULT_BACKGROUND

    def __post_init__(self):
        seen: set[str] = set()
        for camera in self.cameras:
            if camera.camera_id in seen:
                raise ValueError(f"duplicate camera_id {camera.camera_id!r}")
            seen.add(camera.camera_id)
            ordered = sorted(camera.events, key=lambda e: e.t_start_ms)
            for event in ordered:
                if not event.keywords:
                    raise ValueError(
                        f"{camera.camera_id}: event at {event.t_start_ms} has no keywords"
                    )
                if not 0 <= event.t_start_ms < event.t_end_ms <= camera.duration_ms:
                    raise ValueError(
                        f"{camera.camera_id}: event [{event.t_start_ms},{event.t_end_ms}) "
                        f"outside duration {camera.duration_ms}"
                    )
            for first, second in zip(ordered, ordered[1:]):
                if second.t_start_ms < first.t_end_ms:
                    raise OverlappingEvents(
                        f"{camera.camera_id}: events at {first.t_start_ms} and "
                        f"{second.t_start_ms} overlap"
                    )


def load_scenario(path: str | Path) -> ScenarioScript:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    cameras = tuple(
        ScriptCamera(
            camera_id=cam["camera_id"],
            base_epoch_ms=cam.get("base_epoch_ms", 0),
            duration_ms=cam["duration_ms"],
            events=tuple(
                ScriptEvent(
                    t_start_ms=ev["t_start_ms"],
                    t_end_ms=ev["t_end_ms"],
                    caption=ev["caption"],
                    keywords=tuple(ev["keywords"]),
                )
                for ev in cam.get("events", [])
            ),
            source_bytes=cam.get("source_bytes", 0),
        )
        for cam in raw.get("cameras", [])
    )
    return ScenarioScript(
        cameras=cameras,
        background_caption=raw.get("background_caption", DEFAULT_BACKGROUND),
    )


def generate_scenario(
    script: ScenarioScript, fps: float, max_frames: int | None = None
) -> dict[str, list[tuple[int, str]]]:
    """Per-camera (offset_ms, text) manifests for the sampling plan.

    A sample offset belongs to an event iff t_start <= offset < t_end
    (half-open, so boundaries are never double-attributed); uncovered
    offsets get the background caption.
    """
    policy = SamplingPolicy(fps=fps, max_frames=max_frames)
    manifests: dict[str, list[tuple[int, str]]] = {}
    for camera in script.cameras:
        events = sorted(camera.events, key=lambda e: e.t_start_ms)
        starts = [e.t_start_ms for e in events]
        rows: list[tuple[int, str]] = []
        for offset in plan_samples(camera.duration_ms, policy):
            idx = bisect_right(starts, offset) - 1
            if idx >= 0 and offset < events[idx].t_end_ms:
                rows.append((offset, events[idx].caption))
            else:
                rows.append((offset, script.background_caption))
        manifests[camera.camera_id] = rows
    return manifests


def write_manifests(
    manifests: dict[str, list[tuple[int, str]]], directory: str | Path
) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for camera_id, rows in sorted(manifests.items()):
        path = directory / f"{camera_id}.ndjson"
        lines = [
            json.dumps({"offset_ms": offset, "text": text}, ensure_ascii=False)
            for offset, text in rows
        ]
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        paths[camera_id] = path
    return paths


def match_events(
    events: Sequence[ScriptEvent], summary_lines: Sequence[tuple[int, int, str]]
) -> list[int | None]:
    """First line index whose tokens contain all of each event's keywords."""
    line_tokens = [set(normalize_tokens(text)) for _, _, text in summary_lines]
    matches: list[int | None] = []
    for event in events:
        keywords = event.keyword_tokens()
        found = None
        for idx, tokens in enumerate(line_tokens):
            if keywords <= tokens:
                found = idx
                break
        matches.append(found)
    return matches


def kendall_tau(values: Sequence[int]) -> float:
    """Kendall tau-a of a value sequence against its own index order.

    Pairs tied on value count as neither concordant nor discordant; fewer
    than two values is defined as perfect order (1.0).
    """
    m = len(values)
    if m < 2:
        return 1.0
    concordant = discordant = 0
    for i in range(m):
        for j in range(i + 1, m):
            if values[i] < values[j]:
                concordant += 1
            elif values[i] > values[j]:
                discordant += 1
    return (concordant - discordant) / (m * (m - 1) / 2)


@dataclass(frozen=True)
class TemporalMetrics:
    event_recall: float
    ordering_tau: float


@dataclass(frozen=True)
class SpatialMetrics:
    transition_accuracy: float


def temporal_score(
    events: Sequence[ScriptEvent], summary: CameraSummary
) -> TemporalMetrics:
    """Recall and ordering consistency of one camera's scripted events.

    Tau is computed over matched events only, so recall and ordering are
    reported independently; no events (or <2 matched) is perfect by
    definition.
    """
    ordered = sorted(events, key=lambda e: e.t_start_ms)
    matches = match_events(ordered, summary.lines)
    matched = [m for m in matches if m is not None]
    recall = len(matched) / len(ordered) if ordered else 1.0
    return TemporalMetrics(event_recall=recall, ordering_tau=kendall_tau(matched))


def _ground_truth_transitions(
    script: ScenarioScript,
) -> list[tuple[tuple[str, frozenset[str]], tuple[str, frozenset[str]]]]:
    """Consecutive same-keyword events on different cameras, time-ordered."""
    sightings: dict[frozenset[str], list[tuple[int, str]]] = {}
    for camera in script.cameras:
        for event in camera.events:
            key = event.keyword_tokens()
            sightings.setdefault(key, []).append(
                (camera.base_epoch_ms + event.t_start_ms, camera.camera_id)
            )
    transitions = []
    for keywords, entries in sorted(sightings.items(), key=lambda kv: sorted(kv[0])):
        entries.sort()
        for (_, cam_a), (_, cam_b) in zip(entries, entries[1:]):
            if cam_a != cam_b:
                transitions.append(((cam_a, keywords), (cam_b, keywords)))
    return transitions


def _first_observation(
    entries: Sequence[tuple[str, int, int, str]], camera_id: str, keywords: frozenset[str]
) -> int | None:
    for idx, (cam, _, _, text) in enumerate(entries):
        if cam == camera_id and keywords <= set(normalize_tokens(text)):
            return idx
    return None


def spatial_score(
    script: ScenarioScript, entries: Sequence[tuple[str, int, int, str]]
) -> SpatialMetrics:
    """Fraction of scripted cross-camera handoffs the entries order correctly.

    entries is any fused sequence of (camera_id, start, end, text) — a
    network timeline's entries or an entity trace's hops. No transitions in
    the script is perfect by definition.
    """
    transitions = _ground_truth_transitions(script)
    if not transitions:
        return SpatialMetrics(transition_accuracy=1.0)
    correct = 0
    for (cam_a, keys_a), (cam_b, keys_b) in transitions:
        idx_a = _first_observation(entries, cam_a, keys_a)
        idx_b = _first_observation(entries, cam_b, keys_b)
        if idx_a is not None and idx_b is not None and idx_a < idx_b:
            correct += 1
    return SpatialMetrics(transition_accuracy=correct / len(transitions))


@dataclass(frozen=True)
class CameraEval:
    temporal: TemporalMetrics
    captions: int
    segments: int
    dedup_ratio: float


@dataclass(frozen=True)
class EvalReport:
    temporal: TemporalMetrics
    spatial: SpatialMetrics
    dedup_ratio: float
    compression: CompressionStats
    per_camera: dict[str, CameraEval]

    def to_dict(self) -> dict:
        return {
            "temporal": {
                "event_recall": self.temporal.event_recall,
                "ordering_tau": self.temporal.ordering_tau,
            },
            "spatial": {"transition_accuracy": self.spatial.transition_accuracy},
            "dedup_ratio": self.dedup_ratio,
            "compression": {
                "source_bytes": self.compression.source_bytes,
                "caption_bytes": self.compression.caption_bytes,
                "summary_bytes": self.compression.summary_bytes,
                "ratio": self.compression.ratio,
            },
            "per_camera": {
                camera_id: {
                    "temporal": {
                        "event_recall": entry.temporal.event_recall,
                        "ordering_tau": entry.temporal.ordering_tau,
                    },
                    "captions": entry.captions,
                    "segments": entry.segments,
                    "dedup_ratio": entry.dedup_ratio,
                }
                for camera_id, entry in sorted(self.per_camera.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def format_report_table(report: EvalReport) -> str:
    rows = [
        ("temporal.event_recall", f"{report.temporal.event_recall:.3f}"),
        ("temporal.ordering_tau", f"{report.temporal.ordering_tau:.3f}"),
        ("spatial.transition_accuracy", f"{report.spatial.transition_accuracy:.3f}"),
        ("dedup_ratio", f"{report.dedup_ratio:.3f}"),
        (
            "compression.ratio",
            "unknown" if report.compression.ratio is None else f"{report.compression.ratio:.6f}",
        ),
    ]
    for camera_id, entry in sorted(report.per_camera.items()):
        rows.append(
            (
                f"camera.{camera_id}",
                f"recall={entry.temporal.event_recall:.3f} "
                f"tau={entry.temporal.ordering_tau:.3f} "
                f"captions={entry.captions} segments={entry.segments}",
            )
        )
    width = max(len(name) for name, _ in rows)
    lines = [f"{name.ljust(width)}  {value}" for name, value in rows]
    return "\n".join(lines)


def run_eval(
    script: ScenarioScript,
    fps: float,
    config: AppConfig,
    workdir: str | Path,
) -> EvalReport:
    """Generate, ingest, and score a scenario; pure given the mock backend.

    The store is rebuilt from scratch under workdir/store on every run so
    reruns are byte-identical.
    """
    workdir = Path(workdir)
    store_root = workdir / "store"
    if store_root.exists():
        shutil.rmtree(store_root)
    store = Store(store_root)

    manifests = write_manifests(generate_scenario(script, fps), workdir / "manifests")
    policy = SamplingPolicy(fps=fps)

    per_camera: dict[str, CameraEval] = {}
    total_events = total_matched = 0
    total_captions = total_segments = 0
    taus: list[float] = []
    summaries: list[CameraSummary] = []

    for camera in script.cameras:
        store.register_camera(
            camera.camera_id,
            name=camera.camera_id,
            base_epoch_ms=camera.base_epoch_ms,
            source_bytes=camera.source_bytes,
        )
        source = VideoSource(
            camera_id=camera.camera_id,
            kind="metadata_only",
            path=str(manifests[camera.camera_id]),
            duration_ms=camera.duration_ms,
            base_epoch_ms=camera.base_epoch_ms,
        )
        status = run_pipeline(store, source, policy, config)
        if status.phase != "done":
            raise JobAborted(f"eval pipeline failed for {camera.camera_id}: {status.error}")

        summary = store.scan("camera_summary", camera.camera_id)[0]
        summaries.append(summary)
        temporal = temporal_score(camera.events, summary)
        captions = len(store.scan("caption", camera.camera_id))
        segments = len(store.scan("segment", camera.camera_id))
        per_camera[camera.camera_id] = CameraEval(
            temporal=temporal,
            captions=captions,
            segments=segments,
            dedup_ratio=captions / segments if segments else 1.0,
        )
        ordered = sorted(camera.events, key=lambda e: e.t_start_ms)
        matches = match_events(ordered, summary.lines)
        total_events += len(ordered)
        total_matched += sum(1 for m in matches if m is not None)
        total_captions += captions
        total_segments += segments
        taus.append(temporal.ordering_tau)

    if script.cameras:
        window = (
            min(c.base_epoch_ms for c in script.cameras),
            max(c.base_epoch_ms + c.duration_ms for c in script.cameras),
        )
    else:
        window = (0, 0)
    timeline = merge_timeline(summaries, window)

    return EvalReport(
        temporal=TemporalMetrics(
            event_recall=total_matched / total_events if total_events else 1.0,
            ordering_tau=sum(taus) / len(taus) if taus else 1.0,
        ),
        spatial=spatial_score(script, timeline.entries),
        dedup_ratio=total_captions / total_segments if total_segments else 1.0,
        compression=store.store_stats().total,
        per_camera=per_camera,
    )
