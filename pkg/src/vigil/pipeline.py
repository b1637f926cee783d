"""End-to-end per-camera pipeline and the job manager behind the service.

One job = one source run through ingest -> caption -> dedup -> summarize ->
store. Job status moves monotonically through the phase sequence and every
module error lands in status.error with the phase it broke in; a job never
half-dies silently.
"""

from __future__ import annotations

import shutil
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .captioning import DEFAULT_FRAME_PROMPT, caption_stream, open_backend, render_prompt
from .condense import dedup_run, summarize_abstractive, summarize_extractive
from .config import AppConfig
from .datastore import Store
from .errors import DuplicateJob, VigilError
from .ingest import SamplingPolicy, VideoSource, extract_frames

PHASES = ("queued", "sampling", "captioning", "condensing", "storing", "done", "failed")


@dataclass
class JobStatus:
    """Mutable progress record for one pipeline run."""

    job_id: str
    camera_id: str
    phase: str = "queued"
    frames_total: int = 0
    frames_done: int = 0
    gaps: list[int] = field(default_factory=list)
    error: str | None = None
    retries: int = 0

    def advance(self, phase: str) -> None:
        if PHASES.index(phase) < PHASES.index(self.phase):
            raise ValueError(f"phase cannot move backward: {self.phase} -> {phase}")
        self.phase = phase

    def fail(self, exc: Exception) -> None:
        name = exc.name if isinstance(exc, VigilError) else type(exc).__name__
        self.error = f"{name} in phase {self.phase}: {exc}"
        self.phase = "failed"

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "camera_id": self.camera_id,
            "phase": self.phase,
            "frames_total": self.frames_total,
            "frames_done": self.frames_done,
            "gaps": list(self.gaps),
            "error": self.error,
            "retries": self.retries,
        }


def run_pipeline(
    store: Store,
    source: VideoSource,
    policy: SamplingPolicy,
    config: AppConfig,
    status: JobStatus | None = None,
) -> JobStatus:
    """Run one source through the full pipeline into the store.

    Returns the terminal JobStatus (done or failed); the same object is
    mutated in place when the caller supplies one, so a job manager can
    poll it while the run progresses.
    """
    status = status or JobStatus(job_id=uuid.uuid4().hex, camera_id=source.camera_id)
    workdir: Path | None = None
    try:
        info = store.camera(source.camera_id)

        status.advance("sampling")
        if source.kind == "video_file":
            workdir = store.root / "work" / status.job_id
        frames = extract_frames(
            source, policy, workdir=workdir, decoder_cmd=config.ingest.decoder_cmd
        )
        status.frames_total = len(frames)

        status.advance("captioning")
        prompt = render_prompt(DEFAULT_FRAME_PROMPT)
        batch = caption_stream(frames, config.backend, prompt)
        status.frames_done = len(batch.captions)
        status.gaps = [gap.offset_ms for gap in batch.gaps]
        status.retries = batch.retries

        status.advance("condensing")
        segments = dedup_run(
            batch.captions, config.condense.threshold, info.base_epoch_ms
        )
        window_to = source.duration_ms
        if window_to == 0 and batch.captions:
            window_to = batch.captions[-1].offset_ms
        window = (info.base_epoch_ms, info.base_epoch_ms + window_to)
        if config.condense.strategy == "abstractive":
            summary = summarize_abstractive(
                source.camera_id, segments, window, config.backend
            )
        else:
            summary = summarize_extractive(
                source.camera_id, segments, window, config.condense.max_lines
            )

        status.advance("storing")
        for caption in batch.captions:
            store.append_caption(caption)
        for segment in segments:
            store.append_segment(segment)
        store.append_camera_summary(summary)

        status.advance("done")
        if workdir is not None and not config.ingest.keep_frames:
            shutil.rmtree(workdir, ignore_errors=True)
    except Exception as exc:
        status.fail(exc)
    return status


class JobManager:
    """Bounded worker pool running pipeline jobs; excess jobs queue up."""

    def __init__(self, store: Store, config: AppConfig, max_workers: int | None = None):
        self.store = store
        self.config = config
        self._executor = ThreadPoolExecutor(
            max_workers=max_workers or config.service.job_workers,
            thread_name_prefix="vigil-job",
        )
        self._jobs: dict[str, JobStatus] = {}
        self._lock = threading.Lock()

    def submit(
        self,
        source: VideoSource,
        policy: SamplingPolicy,
        job_id: str | None = None,
    ) -> JobStatus:
        job_id = job_id or uuid.uuid4().hex
        with self._lock:
            if job_id in self._jobs:
                raise DuplicateJob(f"job {job_id} already submitted")
            status = JobStatus(job_id=job_id, camera_id=source.camera_id)
            self._jobs[job_id] = status
        self._executor.submit(run_pipeline, self.store, source, policy, self.config, status)
        return status

    def get(self, job_id: str) -> JobStatus | None:
        with self._lock:
            return self._jobs.get(job_id)

    def shutdown(self, wait: bool = True) -> None:
        """Finish in-flight jobs; jobs still queued are marked failed."""
        self._executor.shutdown(wait=wait, cancel_futures=True)
        with self._lock:
            for status in self._jobs.values():
                if status.phase == "queued":
                    status.error = "JobAborted: service shut down before start"
                    status.phase = "failed"
