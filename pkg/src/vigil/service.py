"""HTTP API over the pipeline and store.

All endpoints live under /api with JSON bodies. Timestamps in payloads are
integer epoch milliseconds UTC throughout; error bodies always carry an
``error`` field naming one of the typed pipeline errors.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from dataclasses import asdict

import uvicorn
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import errors
from .condense import Segment, summarize_abstractive, summarize_extractive
from .config import AppConfig
from .datastore import Store
from .fusion import fuse_abstractive, fuse_extractive, merge_timeline
from .ingest import SamplingPolicy, VideoSource
from .pipeline import JobManager
from .query import MAX_WINDOW_MS, ask, search, track

_ERROR_STATUS = {
    errors.UnknownCamera: 404,
    errors.UnknownJob: 404,
    errors.SourceMissing: 404,
    errors.DuplicateJob: 409,
    errors.DuplicateCamera: 409,
    errors.DuplicateOffset: 409,
    errors.EmptyQuery: 400,
    errors.OverlappingEvents: 400,
    errors.UnknownSourceSize: 400,
    errors.MissingPlaceholder: 400,
    errors.SafetyBlocked: 422,
    errors.BackendUnavailable: 502,
    errors.CredentialMissing: 500,
    errors.IoFailure: 500,
    errors.ParseError: 500,
}


class CameraBody(BaseModel):
    id: str
    name: str = ""
    location_label: str = ""
    base_epoch_ms: int = 0
    source_bytes: int = 0


class IngestBody(BaseModel):
    camera_id: str
    kind: str
    path: str
    fps: float = 1.0
    max_frames: int | None = None
    duration_ms: int = 0
    job_id: str | None = None


class AskBody(BaseModel):
    question: str
    from_ms: int | None = None
    to_ms: int | None = None


def _effective_window(
    segments: list[Segment], from_ms: int | None, to_ms: int | None
) -> tuple[int, int]:
    if from_ms is None:
        from_ms = min((s.start_ms for s in segments), default=0)
    if to_ms is None or to_ms >= MAX_WINDOW_MS:
        to_ms = max((s.end_ms for s in segments), default=from_ms)
    return (from_ms, max(from_ms, to_ms))


def create_app(config: AppConfig, store: Store | None = None) -> FastAPI:
    store = store or Store(config.store.root)
    jobs = JobManager(store, config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        jobs.shutdown(wait=True)

    app = FastAPI(title="vigil", lifespan=lifespan)
    app.state.store = store
    app.state.jobs = jobs

    @app.exception_handler(errors.VigilError)
    async def _vigil_error(request: Request, exc: errors.VigilError):
        status = _ERROR_STATUS.get(type(exc), 400)
        return JSONResponse(
            status_code=status, content={"error": exc.name, "detail": str(exc)}
        )

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/cameras", status_code=201)
    def register_camera(body: CameraBody):
        info = store.register_camera(
            body.id,
            name=body.name,
            location_label=body.location_label,
            base_epoch_ms=body.base_epoch_ms,
            source_bytes=body.source_bytes,
        )
        return {"id": body.id, **asdict(info)}

    @app.post("/api/ingest", status_code=202)
    def start_ingest(body: IngestBody):
        info = store.camera(body.camera_id)  # raises UnknownCamera up front
        source = VideoSource(
            camera_id=body.camera_id,
            kind=body.kind,
            path=body.path,
            duration_ms=body.duration_ms,
            base_epoch_ms=info.base_epoch_ms,
        )
        policy = SamplingPolicy(fps=body.fps, max_frames=body.max_frames)
        status = jobs.submit(source, policy, job_id=body.job_id)
        return {"job_id": status.job_id}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        status = jobs.get(job_id)
        if status is None:
            raise errors.UnknownJob(f"no job {job_id!r}")
        return status.to_dict()

    @app.get("/api/cameras/{camera_id}/segments")
    def camera_segments(camera_id: str, from_ms: int | None = None, to_ms: int | None = None):
        store.camera(camera_id)
        return [asdict(s) for s in store.scan("segment", camera_id, from_ms, to_ms)]

    @app.get("/api/cameras/{camera_id}/summary")
    def camera_summary(
        camera_id: str,
        from_ms: int | None = None,
        to_ms: int | None = None,
        strategy: str | None = None,
    ):
        store.camera(camera_id)
        segments = store.scan("segment", camera_id, from_ms, to_ms)
        window = _effective_window(segments, from_ms, to_ms)
        strategy = strategy or config.condense.strategy
        if strategy == "abstractive":
            summary = summarize_abstractive(camera_id, segments, window, config.backend)
        else:
            summary = summarize_extractive(
                camera_id, segments, window, config.condense.max_lines
            )
        return asdict(summary)

    @app.get("/api/network/summary")
    def network_summary(
        from_ms: int | None = None, to_ms: int | None = None, strategy: str | None = None
    ):
        summaries = []
        all_segments: list[Segment] = []
        for camera_id in sorted(store.manifest):
            segments = store.scan("segment", camera_id, from_ms, to_ms)
            all_segments.extend(segments)
            window = _effective_window(segments, from_ms, to_ms)
            summaries.append(
                summarize_extractive(camera_id, segments, window, config.condense.max_lines)
            )
        window = _effective_window(all_segments, from_ms, to_ms)
        timeline = merge_timeline(summaries, window)
        strategy = strategy or config.condense.strategy
        if strategy == "abstractive":
            fused = fuse_abstractive(timeline, config.backend)
        else:
            fused = fuse_extractive(timeline)
        return asdict(fused)

    @app.get("/api/search")
    def search_endpoint(
        q: str,
        camera: str | None = None,
        from_ms: int | None = None,
        to_ms: int | None = None,
        limit: int = 20,
    ):
        hits = search(store, q, camera, from_ms, to_ms, limit)
        return [asdict(h) for h in hits]

    @app.get("/api/track")
    def track_endpoint(q: str, from_ms: int | None = None, to_ms: int | None = None):
        trace = track(store, q, from_ms, to_ms)
        return {
            "query": trace.query,
            "hops": [
                {"camera_id": cam, "start_ms": start, "end_ms": end, "matched_text": text}
                for cam, start, end, text in trace.hops
            ],
        }

    @app.post("/api/ask")
    def ask_endpoint(body: AskBody):
        result = ask(store, body.question, body.from_ms, body.to_ms, config.backend)
        return {
            "answer": result.answer,
            "model_id": result.model_id,
            "context": [
                {"camera_id": h.camera_id, "start_ms": h.start_ms, "text": h.text}
                for h in result.context
            ],
        }

    @app.get("/api/stats")
    def stats():
        report = store.store_stats()
        return {
            "per_camera": {cam: asdict(cs) for cam, cs in report.per_camera.items()},
            "total": asdict(report.total),
            "unknown_sources": list(report.unknown_sources),
        }

    return app


def serve(config: AppConfig) -> None:
    """Run the HTTP service until interrupted."""
    app = create_app(config)
    try:
        uvicorn.run(app, host=config.service.host, port=config.service.port)
    except OSError as exc:
        raise errors.BindFailure(
            f"cannot bind {config.service.host}:{config.service.port}: {exc}"
        ) from exc
