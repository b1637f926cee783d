"""Merge per-camera summaries into one network timeline and trace entities.

Absolute epoch timestamps are trusted as-is: per-camera clocks are assumed
synchronized, so ordering across cameras is plain sorting on start time.
"""

from __future__ import annotations

from dataclasses import dataclass

from .captioning import BackendConfig, MockBackend, PromptTemplate, RemoteBackend, render_prompt
from .condense import (
    CameraSummary,
    Segment,
    format_observations,
    normalize_tokens,
    parse_summary_lines,
)
from .errors import DuplicateCamera, EmptyQuery

DEFAULT_MERGE_GAP_MS = 2000

DEFAULT_FUSION_PROMPT = PromptTemplate(
    id="fusion_default",
    body="You are given timestamped summaries from multiple CCTV cameras covering "
    "one area. Produce a single chronological account of events across the area, "
    "noting when activity moves between cameras.\n\n{observations}",
)


@dataclass(frozen=True)
class NetworkTimeline:
    """All cameras' summary lines in one chronological sequence."""

    window: tuple[int, int]
    entries: tuple[tuple[str, int, int, str], ...]  # (camera_id, start, end, text)


@dataclass(frozen=True)
class NetworkSummary:
    """Fused account of the whole camera network over a window."""

    window: tuple[int, int]
    lines: tuple[tuple[str, int, int, str], ...]  # (camera_id | "network", start, end, text)
    strategy: str
    model_id: str | None = None


@dataclass(frozen=True)
class EntityTrace:
    """Time-ordered sightings of one queried entity across cameras."""

    query: str
    hops: tuple[tuple[str, int, int, str], ...]  # (camera_id, start, end, matched_text)


def _overlaps(start: int, end: int, window: tuple[int, int]) -> bool:
    return start <= window[1] and end >= window[0]


def merge_timeline(
    summaries: list[CameraSummary], window: tuple[int, int]
) -> NetworkTimeline:
    """Interleave all cameras' summary lines, sorted by (start_ms, camera_id).

    Lines overlapping the window are kept; sorting is stable, so a camera's
    own line order survives ties.
    """
    seen: set[str] = set()
    for summary in summaries:
        if summary.camera_id in seen:
            raise DuplicateCamera(f"camera {summary.camera_id} appears twice")
        seen.add(summary.camera_id)
    entries = [
        (summary.camera_id, start, end, text)
        for summary in summaries
        for start, end, text in summary.lines
        if _overlaps(start, end, window)
    ]
    entries.sort(key=lambda e: (e[1], e[0]))
    return NetworkTimeline(window=window, entries=tuple(entries))


def fuse_extractive(timeline: NetworkTimeline) -> NetworkSummary:
    """One line per timeline entry, text prefixed with the source camera."""
    lines = tuple(
        (camera_id, start, end, f"[{camera_id}] {text}")
        for camera_id, start, end, text in timeline.entries
    )
    return NetworkSummary(window=timeline.window, lines=lines, strategy="extractive")


def fuse_abstractive(
    timeline: NetworkTimeline,
    config: BackendConfig,
    template: PromptTemplate = DEFAULT_FUSION_PROMPT,
    backend: MockBackend | RemoteBackend | None = None,
) -> NetworkSummary:
    """Fuse the timeline through the text backend into one account.

    An empty timeline short-circuits to the (empty) extractive summary
    without touching the backend.
    """
    if not timeline.entries:
        return fuse_extractive(timeline)
    observations = format_observations(
        (start, end, f"[{camera_id}] {text}")
        for camera_id, start, end, text in timeline.entries
    )
    prompt = render_prompt(template, {"observations": observations})
    own_backend = backend is None
    backend = backend or RemoteBackend(config)
    try:
        text, model_id = backend.generate(prompt)
    finally:
        if own_backend:
            backend.close()
    lines = tuple(
        ("network", start, end, line_text)
        for start, end, line_text in parse_summary_lines(text, timeline.window)
    )
    return NetworkSummary(
        window=timeline.window, lines=lines, strategy="abstractive", model_id=model_id
    )


def correlate_entity(
    segments: list[Segment],
    query: str,
    window: tuple[int, int],
    merge_gap_ms: int = DEFAULT_MERGE_GAP_MS,
) -> EntityTrace:
    """Trace an entity: segments containing every query token, time-ordered.

    Consecutive hops on the same camera merge when the gap between them is
    under merge_gap_ms — two sightings that close together are one
    continuous observation.
    """
    tokens = set(normalize_tokens(query))
    if not tokens:
        raise EmptyQuery("query has no searchable tokens")
    matches = [
        (s.camera_id, s.start_ms, s.end_ms, s.representative_text)
        for s in segments
        if _overlaps(s.start_ms, s.end_ms, window)
        and tokens <= set(normalize_tokens(s.representative_text))
    ]
    matches.sort(key=lambda m: (m[1], m[0]))
    hops: list[tuple[str, int, int, str]] = []
    for camera_id, start, end, text in matches:
        if hops:
            prev_cam, prev_start, prev_end, prev_text = hops[-1]
            if prev_cam == camera_id and start - prev_end < merge_gap_ms:
                hops[-1] = (prev_cam, prev_start, max(prev_end, end), prev_text)
                continue
        hops.append((camera_id, start, end, text))
    return EntityTrace(query=query, hops=tuple(hops))
