"""Command-line interface mirroring the HTTP API.

    vigil [--config cfg.json] [--store ROOT] <command> ...

Commands: ingest, summarize, fuse, search, track, ask, stats, serve, eval.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

from .condense import summarize_abstractive, summarize_extractive
from .config import AppConfig, load_config
from .datastore import Store
from .errors import VigilError
from .evalharness import format_report_table, load_scenario, run_eval
from .fusion import fuse_abstractive, fuse_extractive, merge_timeline
from .ingest import SamplingPolicy, VideoSource
from .pipeline import run_pipeline
from .query import ask as ask_query
from .query import search as search_query
from .query import track as track_query
from .service import _effective_window, serve


def _print(payload) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False))


def _cmd_ingest(args, config: AppConfig) -> int:
    store = Store(config.store.root)
    if args.camera not in store.manifest:
        store.register_camera(
            args.camera,
            name=args.name or args.camera,
            location_label=args.location,
            base_epoch_ms=args.base_epoch_ms,
            source_bytes=args.source_bytes,
        )
    source = VideoSource(
        camera_id=args.camera,
        kind=args.kind,
        path=args.path,
        duration_ms=args.duration_ms,
        base_epoch_ms=store.camera(args.camera).base_epoch_ms,
    )
    policy = SamplingPolicy(fps=args.fps, max_frames=args.max_frames)
    status = run_pipeline(store, source, policy, config)
    _print(status.to_dict())
    return 0 if status.phase == "done" else 1


def _cmd_summarize(args, config: AppConfig) -> int:
    store = Store(config.store.root)
    store.camera(args.camera)
    segments = store.scan("segment", args.camera, args.from_ms, args.to_ms)
    window = _effective_window(segments, args.from_ms, args.to_ms)
    strategy = args.strategy or config.condense.strategy
    if strategy == "abstractive":
        summary = summarize_abstractive(args.camera, segments, window, config.backend)
    else:
        summary = summarize_extractive(args.camera, segments, window, config.condense.max_lines)
    _print(asdict(summary))
    return 0


def _cmd_fuse(args, config: AppConfig) -> int:
    store = Store(config.store.root)
    summaries = []
    all_segments = []
    for camera_id in sorted(store.manifest):
        segments = store.scan("segment", camera_id, args.from_ms, args.to_ms)
        all_segments.extend(segments)
        window = _effective_window(segments, args.from_ms, args.to_ms)
        summaries.append(
            summarize_extractive(camera_id, segments, window, config.condense.max_lines)
        )
    timeline = merge_timeline(summaries, _effective_window(all_segments, args.from_ms, args.to_ms))
    strategy = args.strategy or config.condense.strategy
    if strategy == "abstractive":
        fused = fuse_abstractive(timeline, config.backend)
    else:
        fused = fuse_extractive(timeline)
    _print(asdict(fused))
    return 0


def _cmd_search(args, config: AppConfig) -> int:
    store = Store(config.store.root)
    hits = search_query(store, args.query, args.camera, args.from_ms, args.to_ms, args.limit)
    _print([asdict(h) for h in hits])
    return 0


def _cmd_track(args, config: AppConfig) -> int:
    store = Store(config.store.root)
    trace = track_query(store, args.query, args.from_ms, args.to_ms)
    _print(
        {
            "query": trace.query,
            "hops": [
                {"camera_id": cam, "start_ms": start, "end_ms": end, "matched_text": text}
                for cam, start, end, text in trace.hops
            ],
        }
    )
    return 0


def _cmd_ask(args, config: AppConfig) -> int:
    store = Store(config.store.root)
    result = ask_query(store, args.question, args.from_ms, args.to_ms, config.backend)
    _print(
        {
            "answer": result.answer,
            "model_id": result.model_id,
            "context": [
                {"camera_id": h.camera_id, "start_ms": h.start_ms, "text": h.text}
                for h in result.context
            ],
        }
    )
    return 0


def _cmd_stats(args, config: AppConfig) -> int:
    store = Store(config.store.root)
    report = store.store_stats()
    _print(
        {
            "per_camera": {cam: asdict(cs) for cam, cs in report.per_camera.items()},
            "total": asdict(report.total),
            "unknown_sources": list(report.unknown_sources),
        }
    )
    return 0


def _cmd_serve(args, config: AppConfig) -> int:
    if args.port is not None:
        from .config import ServiceConfig

        config = AppConfig(
            backend=config.backend,
            condense=config.condense,
            ingest=config.ingest,
            store=config.store,
            service=ServiceConfig(
                host=config.service.host,
                port=args.port,
                job_workers=config.service.job_workers,
            ),
        )
    serve(config)
    return 0


def _cmd_eval(args, config: AppConfig) -> int:
    script = load_scenario(args.scenario)
    if args.workdir:
        report = run_eval(script, args.fps, config, args.workdir)
    else:
        with tempfile.TemporaryDirectory(prefix="vigil-eval-") as tmp:
            report = run_eval(script, args.fps, config, tmp)
    Path(args.out).write_text(report.to_json(), encoding="utf-8")
    print(format_report_table(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vigil", description=__doc__)
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--store", help="store root (overrides config store.root)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="run one source through the pipeline")
    p.add_argument("--camera", required=True)
    p.add_argument("--kind", required=True, choices=["video_file", "frames_dir", "metadata_only"])
    p.add_argument("--path", required=True)
    p.add_argument("--fps", type=float, default=1.0)
    p.add_argument("--max-frames", type=int, default=None)
    p.add_argument("--duration-ms", type=int, default=0)
    p.add_argument("--base-epoch-ms", type=int, default=0, help="used when auto-registering")
    p.add_argument("--source-bytes", type=int, default=0, help="used when auto-registering")
    p.add_argument("--name", default="")
    p.add_argument("--location", default="")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("summarize", help="camera summary over a window")
    p.add_argument("--camera", required=True)
    p.add_argument("--from", dest="from_ms", type=int, default=None)
    p.add_argument("--to", dest="to_ms", type=int, default=None)
    p.add_argument("--strategy", choices=["extractive", "abstractive"], default=None)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("fuse", help="network summary over a window")
    p.add_argument("--from", dest="from_ms", type=int, default=None)
    p.add_argument("--to", dest="to_ms", type=int, default=None)
    p.add_argument("--strategy", choices=["extractive", "abstractive"], default=None)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("search", help="ranked keyword search")
    p.add_argument("query")
    p.add_argument("--camera", default=None)
    p.add_argument("--from", dest="from_ms", type=int, default=None)
    p.add_argument("--to", dest="to_ms", type=int, default=None)
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("track", help="trace an entity across cameras")
    p.add_argument("query")
    p.add_argument("--from", dest="from_ms", type=int, default=None)
    p.add_argument("--to", dest="to_ms", type=int, default=None)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("ask", help="answer a question over retrieved observations")
    p.add_argument("question")
    p.add_argument("--from", dest="from_ms", type=int, default=None)
    p.add_argument("--to", dest="to_ms", type=int, default=None)
    p.set_defaults(func=_cmd_ask)

    p = sub.add_parser("stats", help="storage compression statistics")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("eval", help="run a scripted scenario and score it")
    p.add_argument("--scenario", required=True)
    p.add_argument("--fps", type=float, default=1.0)
    p.add_argument("--out", default="eval_report.json")
    p.add_argument("--workdir", default=None, help="keep pipeline artifacts here")
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    if args.store:
        config = config.with_store_root(args.store)
    try:
        return args.func(args, config)
    except VigilError as exc:
        print(json.dumps({"error": exc.name, "detail": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
