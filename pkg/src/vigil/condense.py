"""Collapse noisy per-frame captions into time segments and camera summaries.

Consecutive captions whose token-set Jaccard similarity to the run's first
caption (the anchor) stays at or above a threshold form one segment; the
anchor's text represents the run. Comparing against the anchor rather than
the previous caption keeps slow drift from chaining into one giant segment.

Summaries come in two strategies: extractive (deterministic, one line per
segment) and abstractive (a text backend condenses the segment texts).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable

from .captioning import (
    Caption,
    BackendConfig,
    MockBackend,
    PromptTemplate,
    RemoteBackend,
    render_prompt,
)
from .errors import UnknownSourceSize

DEFAULT_SIMILARITY_THRESHOLD = 0.80
DEFAULT_MAX_SUMMARY_LINES = 100

DEFAULT_CONDENSE_PROMPT = PromptTemplate(
    id="condense_default",
    body="The following are timestamped descriptions of consecutive video frames "
    "from one camera. Produce a concise summary that eliminates redundancy, "
    "preserves all distinct events in order, and keeps timestamps.\n\n{observations}",
)

_LINE_SPAN = re.compile(r"^\[(\d+)-(\d+)\]\s*(.*)$")


@dataclass(frozen=True)
class Segment:
    """A maximal run of mutually similar consecutive captions."""

    camera_id: str
    start_ms: int
    end_ms: int
    representative_text: str
    frame_count: int

    def __post_init__(self):
        if self.start_ms > self.end_ms:
            raise ValueError("segment start_ms must be <= end_ms")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")


@dataclass(frozen=True)
class CameraSummary:
    """Ordered summary lines for one camera over a time window."""

    camera_id: str
    window: tuple[int, int]
    lines: tuple[tuple[int, int, str], ...]
    strategy: str
    model_id: str | None = None

    def __post_init__(self):
        if self.strategy not in ("extractive", "abstractive"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        starts = [line[0] for line in self.lines]
        if starts != sorted(starts):
            raise ValueError("summary lines must be ordered by start_ms")
        for start, end, _ in self.lines:
            if not (self.window[0] <= start and end <= self.window[1]):
                raise ValueError("summary window must cover all line ranges")


@dataclass(frozen=True)
class CompressionStats:
    """How much text the pipeline stored relative to the source video bytes."""

    source_bytes: int
    caption_bytes: int
    summary_bytes: int
    ratio: float | None

    @property
    def text_bytes(self) -> int:
        return self.caption_bytes + self.summary_bytes


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, strip punctuation and symbol characters, split on whitespace."""
    lowered = text.lower()
    stripped = "".join(
        ch for ch in lowered if unicodedata.category(ch)[0] not in ("P", "S")
    )
    return stripped.split()


def similarity(a: str, b: str) -> float:
    """Jaccard index of the two texts' token sets (both empty counts as 1.0)."""
    set_a = set(normalize_tokens(a))
    set_b = set(normalize_tokens(b))
    if not set_a and not set_b:
        return 1.0
    if not set_a or not set_b:
        return 0.0
    return len(set_a & set_b) / len(set_a | set_b)


def dedup_run(
    captions: list[Caption],
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
    base_epoch_ms: int = 0,
) -> list[Segment]:
    """Greedy left-to-right segmentation of an offset-ordered caption list.

    A caption extends the open segment iff its similarity to the segment's
    anchor (first caption) is >= threshold; otherwise it starts a new one.
    Segment times are absolute: base_epoch_ms + caption offset.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0,1], got {threshold}")
    segments: list[Segment] = []
    anchor: Caption | None = None
    run_start = run_end = run_count = 0
    for caption in captions:
        if anchor is not None and similarity(anchor.text, caption.text) >= threshold:
            run_end = caption.offset_ms
            run_count += 1
            continue
        if anchor is not None:
            segments.append(
                Segment(
                    camera_id=anchor.camera_id,
                    start_ms=base_epoch_ms + run_start,
                    end_ms=base_epoch_ms + run_end,
                    representative_text=anchor.text,
                    frame_count=run_count,
                )
            )
        anchor = caption
        run_start = run_end = caption.offset_ms
        run_count = 1
    if anchor is not None:
        segments.append(
            Segment(
                camera_id=anchor.camera_id,
                start_ms=base_epoch_ms + run_start,
                end_ms=base_epoch_ms + run_end,
                representative_text=anchor.text,
                frame_count=run_count,
            )
        )
    return segments


def _cover_window(window: tuple[int, int], lines: list[tuple[int, int, str]]) -> tuple[int, int]:
    if not lines:
        return window
    return (
        min(window[0], min(line[0] for line in lines)),
        max(window[1], max(line[1] for line in lines)),
    )


def summarize_extractive(
    camera_id: str,
    segments: list[Segment],
    window: tuple[int, int],
    max_lines: int = DEFAULT_MAX_SUMMARY_LINES,
) -> CameraSummary:
    """One line per segment; over max_lines, the longest-duration segments win.

    Duration ties break toward earlier start; survivors are reordered
    chronologically. Pure and deterministic.
    """
    if max_lines <= 0:
        raise ValueError("max_lines must be positive")
    lines = [(s.start_ms, s.end_ms, s.representative_text) for s in segments]
    if len(lines) > max_lines:
        ranked = sorted(lines, key=lambda ln: (-(ln[1] - ln[0]), ln[0]))
        lines = sorted(ranked[:max_lines], key=lambda ln: ln[0])
    return CameraSummary(
        camera_id=camera_id,
        window=_cover_window(window, lines),
        lines=tuple(lines),
        strategy="extractive",
    )


def format_observations(lines: Iterable[tuple[int, int, str]]) -> str:
    """Timestamp-prefix observation lines the way condensation prompts expect."""
    return "\n".join(f"[{start}-{end}] {text}" for start, end, text in lines)


def parse_summary_lines(
    text: str, window: tuple[int, int]
) -> list[tuple[int, int, str]]:
    """Split backend output into lines, recovering [start-end] prefixes.

    Lines the model emits without a parsable span carry the whole window.
    """
    lines: list[tuple[int, int, str]] = []
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw:
            continue
        match = _LINE_SPAN.match(raw)
        if match:
            start, end = int(match.group(1)), int(match.group(2))
            if start <= end:
                lines.append((start, end, match.group(3).strip()))
                continue
        lines.append((window[0], window[1], raw))
    lines.sort(key=lambda ln: ln[0])
    return lines


def summarize_abstractive(
    camera_id: str,
    segments: list[Segment],
    window: tuple[int, int],
    config: BackendConfig,
    template: PromptTemplate = DEFAULT_CONDENSE_PROMPT,
    backend: MockBackend | RemoteBackend | None = None,
) -> CameraSummary:
    """Condense segments through the text backend.

    No segments short-circuits to an empty extractive summary — there is
    nothing to send, so no backend call is made.
    """
    if not segments:
        return summarize_extractive(camera_id, [], window)
    observations = format_observations(
        (s.start_ms, s.end_ms, s.representative_text) for s in segments
    )
    prompt = render_prompt(template, {"observations": observations})
    own_backend = backend is None
    backend = backend or RemoteBackend(config)
    try:
        text, model_id = backend.generate(prompt)
    finally:
        if own_backend:
            backend.close()
    lines = parse_summary_lines(text, window)
    return CameraSummary(
        camera_id=camera_id,
        window=_cover_window(window, lines),
        lines=tuple(lines),
        strategy="abstractive",
        model_id=model_id,
    )


def compression_stats(
    source_bytes: int,
    caption_records: Iterable[str],
    summary_records: Iterable[str],
) -> CompressionStats:
    """Stored-text bytes (UTF-8) relative to the source video size."""
    if source_bytes <= 0:
        raise UnknownSourceSize("source_bytes must be positive to compute a ratio")
    caption_bytes = sum(len(record.encode("utf-8")) for record in caption_records)
    summary_bytes = sum(len(record.encode("utf-8")) for record in summary_records)
    return CompressionStats(
        source_bytes=source_bytes,
        caption_bytes=caption_bytes,
        summary_bytes=summary_bytes,
        ratio=(caption_bytes + summary_bytes) / source_bytes,
    )
