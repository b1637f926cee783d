"""Frame ingestion: turn a video source into an ordered stream of FrameSamples.

Three source kinds are supported:

* ``video_file``    — frames are decoded by an external tool (host config)
* ``frames_dir``    — a directory of pre-extracted ``<offset_ms>.<ext>`` images
* ``metadata_only`` — a frames manifest of scripted texts, no media at all;
  this is the deterministic test path consumed by the mock caption backend.

All sampling arithmetic is integer milliseconds. The sampling step is
``round(1000 / fps)``, so e.g. 3 fps steps by 333 ms rather than exact
thirds; this avoids float drift in long videos.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    DecodeFailure,
    DuplicateOffset,
    EmptySource,
    ParseError,
    SourceMissing,
)

SOURCE_KINDS = ("video_file", "frames_dir", "metadata_only")


@dataclass(frozen=True)
class SamplingPolicy:
    """How densely to sample a source, in frames per second."""

    fps: float = 1.0
    max_frames: int | None = None

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if round(1000 / self.fps) < 1:
            raise ValueError(f"fps {self.fps} yields a sub-millisecond step")
        if self.max_frames is not None and self.max_frames <= 0:
            raise ValueError(f"max_frames must be positive, got {self.max_frames}")

    @property
    def step_ms(self) -> int:
        return round(1000 / self.fps)


@dataclass(frozen=True)
class VideoSource:
    """One camera's footage (or scripted stand-in) to ingest."""

    camera_id: str
    kind: str
    path: str
    duration_ms: int = 0
    base_epoch_ms: int = 0

    def __post_init__(self):
        if not self.camera_id:
            raise ValueError("camera_id must be nonempty")
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.duration_ms < 0:
            raise ValueError("duration_ms must be nonnegative")
        if self.base_epoch_ms < 0:
            raise ValueError("base_epoch_ms must be nonnegative")


@dataclass(frozen=True)
class FrameSample:
    """One sampled frame: either an image on disk or a scripted description."""

    camera_id: str
    offset_ms: int
    image_ref: str | None = None
    scripted_text: str | None = None

    def __post_init__(self):
        if self.offset_ms < 0:
            raise ValueError("offset_ms must be nonnegative")
        if (self.image_ref is None) == (self.scripted_text is None):
            raise ValueError("exactly one of image_ref / scripted_text required")


def plan_samples(duration_ms: int, policy: SamplingPolicy) -> list[int]:
    """Sample offsets {k * step_ms : k*step_ms < duration_ms}, capped at max_frames.

    Integer arithmetic throughout; an empty duration yields an empty plan.
    """
    if duration_ms < 0:
        raise ValueError("duration_ms must be nonnegative")
    step = policy.step_ms
    count = (duration_ms + step - 1) // step
    if policy.max_frames is not None:
        count = min(count, policy.max_frames)
    return [k * step for k in range(count)]


def load_frame_metadata(path: str | Path) -> list[FrameSample]:
    """Parse a frames manifest: one JSON record per line with offset_ms and text.

    Records come back sorted by offset_ms; duplicate offsets are rejected.
    Blank lines are permitted and skipped. camera_id on the returned samples
    is empty — callers rebind it to their source (see extract_frames).
    """
    path = Path(path)
    if not path.exists():
        raise SourceMissing(f"frames manifest not found: {path}")
    samples: list[FrameSample] = []
    seen: set[int] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                offset = record["offset_ms"]
                text = record["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(
                    f"{path}:{line_no}: malformed manifest line ({exc})",
                    path=str(path),
                    line_no=line_no,
                ) from exc
            if not isinstance(offset, int) or isinstance(offset, bool) or offset < 0:
                raise ParseError(
                    f"{path}:{line_no}: offset_ms must be a nonnegative integer",
                    path=str(path),
                    line_no=line_no,
                )
            if not isinstance(text, str):
                raise ParseError(
                    f"{path}:{line_no}: text must be a string",
                    path=str(path),
                    line_no=line_no,
                )
            if offset in seen:
                raise DuplicateOffset(f"{path}:{line_no}: duplicate offset_ms {offset}")
            seen.add(offset)
            samples.append(FrameSample(camera_id="", offset_ms=offset, scripted_text=text))
    samples.sort(key=lambda s: s.offset_ms)
    return samples


def _match_frame_files(offsets: list[int], files: dict[int, Path]) -> list[tuple[int, Path]]:
    """Assign each planned offset the nearest unused file at or before it."""
    file_offsets = sorted(files)
    used = [False] * len(file_offsets)
    matched: list[tuple[int, Path]] = []
    for planned in offsets:
        idx = bisect_right(file_offsets, planned) - 1
        while idx >= 0 and used[idx]:
            idx -= 1
        if idx < 0:
            continue
        used[idx] = True
        matched.append((planned, files[file_offsets[idx]]))
    return matched


def _scan_frame_dir(directory: Path) -> dict[int, Path]:
    files: dict[int, Path] = {}
    for entry in directory.iterdir():
        if not entry.is_file():
            continue
        try:
            offset = int(entry.stem)
        except ValueError:
            continue
        if offset >= 0:
            files[offset] = entry
    return files


def _run_decoder(decoder_cmd: str, source: VideoSource, policy: SamplingPolicy, workdir: Path) -> None:
    """Invoke the host-configured decoder; it must emit <offset_ms>.jpg files.

    decoder_cmd is a command template with {input}, {fps} and {outdir} slots,
    tokenized before substitution so paths with spaces stay single arguments.
    """
    argv = [
        token.format(input=source.path, fps=policy.fps, outdir=str(workdir))
        for token in shlex.split(decoder_cmd)
    ]
    proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        output = (proc.stdout + proc.stderr).strip()
        raise DecodeFailure(
            f"decoder exited {proc.returncode} for {source.path}: {output}",
            decoder_output=output,
        )


def extract_frames(
    source: VideoSource,
    policy: SamplingPolicy,
    workdir: str | Path | None = None,
    decoder_cmd: str | None = None,
) -> list[FrameSample]:
    """Produce FrameSamples for a source, in strictly increasing offset order.

    video_file sources need decoder_cmd and a workdir for decoded images;
    frames_dir sources match existing files to the sampling plan; and
    metadata_only sources pass their manifest entries straight through
    (capped at max_frames).
    """
    src_path = Path(source.path)
    if not src_path.exists():
        raise SourceMissing(f"source path not found: {source.path}")

    if source.kind == "metadata_only":
        samples = load_frame_metadata(src_path)
        if source.duration_ms > 0:
            for sample in samples:
                if sample.offset_ms >= source.duration_ms:
                    raise ParseError(
                        f"{src_path}: offset {sample.offset_ms} beyond declared "
                        f"duration {source.duration_ms}",
                        path=str(src_path),
                    )
        if policy.max_frames is not None:
            samples = samples[: policy.max_frames]
        if not samples and source.duration_ms > 0:
            raise EmptySource(f"no frames in manifest for nonzero duration: {src_path}")
        return [
            FrameSample(
                camera_id=source.camera_id,
                offset_ms=s.offset_ms,
                scripted_text=s.scripted_text,
            )
            for s in samples
        ]

    if source.kind == "frames_dir":
        frame_dir = src_path
    else:  # video_file
        if decoder_cmd is None:
            raise DecodeFailure("no decoder configured (ingest.decoder_cmd)")
        frame_dir = Path(workdir) if workdir is not None else src_path.parent / f"{src_path.stem}_frames"
        frame_dir.mkdir(parents=True, exist_ok=True)
        _run_decoder(decoder_cmd, source, policy, frame_dir)

    files = _scan_frame_dir(frame_dir)
    if source.duration_ms > 0:
        matched = _match_frame_files(plan_samples(source.duration_ms, policy), files)
        if not matched:
            raise EmptySource(f"no frames produced for {source.path}")
    else:
        # Duration unknown: the emitted/present files themselves are the plan.
        matched = [(offset, files[offset]) for offset in sorted(files)]
        if policy.max_frames is not None:
            matched = matched[: policy.max_frames]
    return [
        FrameSample(camera_id=source.camera_id, offset_ms=offset, image_ref=str(path))
        for offset, path in matched
    ]
