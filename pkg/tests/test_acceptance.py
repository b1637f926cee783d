"""Acceptance suite: one test per acceptance criterion.

Each test prints an ACCEPTANCE <n> PASS/FAIL line (visible under ``pytest -s``)
and pins the criterion's stated tolerance and runtime bound.
"""

import base64
import json
import math
import random
import time
from contextlib import contextmanager

import pytest
from fastapi.testclient import TestClient

from vigil.captioning import BackendConfig, RemoteBackend, caption_frame, caption_stream
from vigil.condense import dedup_run, normalize_tokens, similarity
from vigil.config import AppConfig, StoreOptions
from vigil.datastore import Store
from vigil.errors import ParseError, SafetyBlocked
from vigil.evalharness import (
    ScenarioScript,
    ScriptCamera,
    ScriptEvent,
    kendall_tau,
    load_scenario,
    run_eval,
    spatial_score,
    temporal_score,
)
from vigil.fakeserver import FakeBackendServer
from vigil.fusion import merge_timeline
from vigil.ingest import FrameSample, SamplingPolicy, plan_samples
from vigil.query import track
from vigil.service import create_app

from conftest import SCENARIO_DIR, TEST_KEY_ENV, mk_caption
from test_pipeline_service import write_manifest


@contextmanager
def criterion(n, title):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {n} ({title}): FAIL")
        raise
    print(f"\nACCEPTANCE {n} ({title}): PASS")


def test_criterion_1_sampling_oracle():
    started = time.monotonic()
    with criterion(1, "sampling oracle"):
        assert plan_samples(2500, SamplingPolicy(fps=2)) == [0, 500, 1000, 1500, 2000]
        assert len(plan_samples(10_000, SamplingPolicy(fps=1))) == 10

        rng = random.Random(20260809)
        for _ in range(1000):
            duration = rng.randrange(0, 200_000)
            fps = rng.choice([0.25, 0.5, 1, 2, 3, 5, 10, 24, 30])
            max_frames = rng.choice([None, rng.randrange(1, 50)])
            policy = SamplingPolicy(fps=fps, max_frames=max_frames)
            expected = math.ceil(duration / policy.step_ms)
            if max_frames is not None:
                expected = min(expected, max_frames)
            assert len(plan_samples(duration, policy)) == expected
        assert time.monotonic() - started < 1.0


def test_criterion_2_dedup_oracle():
    started = time.monotonic()
    with criterion(2, "dedup oracle"):
        identical = [mk_caption("c", i * 1000, "a man stands") for i in range(10)]
        segments = dedup_run(identical, 0.80)
        assert len(segments) == 1
        assert segments[0].frame_count == 10

        stand_sit = [
            mk_caption("c", 0, "a man stands"),
            mk_caption("c", 1000, "a man stands"),
            mk_caption("c", 2000, "a man sits"),
        ]
        assert similarity("a man stands", "a man sits") == 0.5
        assert len(dedup_run(stand_sit, 0.80)) == 2

        vocab = [
            "a man walks", "a man sits", "a man stands", "an empty corridor",
            "two people talking", "a dog runs past", "a red car stops",
            "someone opens the door", "a woman reads a paper",
        ]
        rng = random.Random(7)
        for _ in range(1000):
            texts = [rng.choice(vocab) for _ in range(rng.randrange(0, 20))]
            threshold = rng.choice([0.0, 0.3, 0.5, 0.8, 1.0])
            captions = [mk_caption("c", i * 1000, t) for i, t in enumerate(texts)]
            segments = dedup_run(captions, threshold)
            # order preservation: spans sorted and non-overlapping
            spans = [(s.start_ms, s.end_ms) for s in segments]
            assert spans == sorted(spans)
            assert all(a[1] < b[0] for a, b in zip(spans, spans[1:]))
            # conservation
            assert sum(s.frame_count for s in segments) == len(captions)
            # idempotence on own representatives
            redone = dedup_run(
                [mk_caption("c", s.start_ms, s.representative_text) for s in segments],
                threshold,
            )
            assert [s.representative_text for s in redone] == [
                s.representative_text for s in segments
            ]
            assert len(redone) == len(segments)
        assert time.monotonic() - started < 5.0


def test_criterion_3_temporal_consistency(tmp_path):
    started = time.monotonic()
    with criterion(3, "temporal consistency"):
        script = load_scenario(SCENARIO_DIR / "five_events.json")
        assert len(script.cameras) == 1
        assert len(script.cameras[0].events) == 5
        report = run_eval(script, fps=1, config=AppConfig(), workdir=tmp_path)
        assert report.temporal.event_recall == 1.0
        assert report.temporal.ordering_tau == 1.0

        # permuted fixture e1,e3,e2: tau = (2 concordant - 1 discordant)/3
        assert kendall_tau([0, 2, 1]) == (2 - 1) / 3

        from vigil.condense import CameraSummary

        events = [
            ScriptEvent(0, 1000, "x", ("kw0",)),
            ScriptEvent(2000, 3000, "y", ("kw1",)),
            ScriptEvent(4000, 5000, "z", ("kw2",)),
        ]
        permuted = CameraSummary(
            camera_id="c", window=(0, 5000), strategy="extractive",
            lines=((0, 10, "kw0 seen"), (20, 30, "kw2 seen"), (40, 50, "kw1 seen")),
        )
        score = temporal_score(events, permuted)
        assert score.ordering_tau == (2 - 1) / 3
        assert time.monotonic() - started < 5.0


def _two_camera_script(base_a, base_b):
    return ScenarioScript(
        cameras=(
            ScriptCamera(
                camera_id="cam_a", base_epoch_ms=base_a, duration_ms=30_000,
                events=(ScriptEvent(0, 10_000, "a man in a red shirt walks",
                                    ("man", "red", "shirt")),),
            ),
            ScriptCamera(
                camera_id="cam_b", base_epoch_ms=base_b, duration_ms=30_000,
                events=(ScriptEvent(12_000, 20_000, "man with red shirt enters",
                                    ("man", "red", "shirt")),),
            ),
        ),
        background_caption="an empty corridor",
    )


def test_criterion_4_spatial_consistency(tmp_path):
    started = time.monotonic()
    with criterion(4, "spatial consistency"):
        base = 1_705_305_600_000
        true_script = _two_camera_script(base, base)
        report = run_eval(true_script, fps=1, config=AppConfig(), workdir=tmp_path / "true")
        assert report.spatial.transition_accuracy == 1.0

        store = Store(tmp_path / "true" / "store")
        trace = track(store, "man red shirt")
        assert [h[0] for h in trace.hops] == ["cam_a", "cam_b"]
        assert trace.hops[0][1] < trace.hops[1][1]

        summaries = [store.scan("camera_summary", c)[0] for c in ("cam_a", "cam_b")]
        timeline = merge_timeline(summaries, (base, base + 30_000))
        starts = [e[1] for e in timeline.entries]
        assert starts == sorted(starts)

        # invert clocks: cam_a's camera clock runs a minute fast, so its
        # stored times land after cam_b's although the real event came first
        skewed_script = _two_camera_script(base + 60_000, base)
        run_eval(skewed_script, fps=1, config=AppConfig(), workdir=tmp_path / "skew")
        skew_store = Store(tmp_path / "skew" / "store")
        skew_summaries = [skew_store.scan("camera_summary", c)[0] for c in ("cam_a", "cam_b")]
        skew_timeline = merge_timeline(skew_summaries, (base, base + 120_000))
        assert spatial_score(true_script, skew_timeline.entries).transition_accuracy == 0.0
        assert time.monotonic() - started < 5.0


def test_criterion_5_determinism(tmp_path):
    with criterion(5, "determinism"):
        script = load_scenario(SCENARIO_DIR / "two_room.json")
        first = run_eval(script, fps=1, config=AppConfig(), workdir=tmp_path / "one")
        second = run_eval(script, fps=1, config=AppConfig(), workdir=tmp_path / "two")
        assert first.to_json() == second.to_json()

        def snapshot(root):
            return {
                str(p.relative_to(root)): p.read_bytes()
                for p in sorted(root.rglob("*"))
                if p.is_file()
            }

        logs_one = snapshot(tmp_path / "one" / "store")
        logs_two = snapshot(tmp_path / "two" / "store")
        assert logs_one.keys() == logs_two.keys()
        assert logs_one == logs_two


def test_criterion_6_compression_claim(tmp_path):
    with criterion(6, "storage compression"):
        script = load_scenario(SCENARIO_DIR / "five_events.json")
        assert script.cameras[0].source_bytes == 10_485_760
        run_eval(script, fps=1, config=AppConfig(), workdir=tmp_path)
        stats = Store(tmp_path / "store").store_stats()
        assert stats.total.source_bytes == 10_485_760
        assert stats.total.ratio is not None
        print(f"\n  stored text: {stats.total.caption_bytes + stats.total.summary_bytes} B "
              f"of {stats.total.source_bytes} B source -> ratio {stats.total.ratio:.6f}")
        assert stats.total.ratio < 0.01


def remote_cfg(endpoint, **kw):
    defaults = dict(
        kind="remote", endpoint=endpoint, api_key_env=TEST_KEY_ENV,
        max_retries=3, rate_limit_rps=4.0, concurrency=3,
        safety=(("dangerous_content", "block_some"),),
    )
    defaults.update(kw)
    return BackendConfig(**defaults)


def image_frame(tmp_path, offset):
    path = tmp_path / f"{offset}.jpg"
    path.write_bytes(f"frame-{offset}".encode())
    return FrameSample(camera_id="cam1", offset_ms=offset, image_ref=str(path))


def test_criterion_7_remote_backend_contract(tmp_path, monkeypatch):
    monkeypatch.setenv(TEST_KEY_ENV, "acceptance-key")
    monkeypatch.setattr("vigil.captioning.BACKOFF_BASE_S", 0.05)
    with criterion(7, "remote backend contract"):
        # two injected 503s then success, retry count recorded
        with FakeBackendServer() as server:
            server.push_response(503, {"error": "busy"})
            server.push_response(503, {"error": "busy"})
            backend = RemoteBackend(remote_cfg(server.endpoint))
            cap = caption_frame(image_frame(tmp_path, 0), backend.config, "p", backend)
            assert cap.text == "a quiet scene"
            assert backend.metrics.retries == 2
            backend.close()

        # a 422 blocked response surfaces SafetyBlocked with its category
        with FakeBackendServer() as server:
            server.push_response(422, {"blocked": True, "category": "dangerous_content"})
            with pytest.raises(SafetyBlocked) as err:
                caption_frame(image_frame(tmp_path, 1), remote_cfg(server.endpoint), "p")
            assert err.value.category == "dangerous_content"

        # request rate never exceeds rate_limit_rps in any 1 s server-log window
        with FakeBackendServer() as server:
            config = remote_cfg(server.endpoint, rate_limit_rps=4.0, concurrency=3)
            frames = [image_frame(tmp_path, o) for o in range(0, 10_000, 1000)]
            batch = caption_stream(frames, config, "p")
            assert len(batch.captions) == 10
            times = sorted(r.t_monotonic for r in server.requests)
            assert len(times) == 10
            for t0 in times:
                assert sum(1 for t in times if t0 <= t <= t0 + 1.0) <= 4


def test_criterion_8_storage_roundtrip(tmp_path):
    with criterion(8, "storage round-trip"):
        from vigil.condense import Segment

        store = Store(tmp_path / "store")
        store.register_camera("cam1", base_epoch_ms=0, source_bytes=1)
        store.register_camera("cam2", base_epoch_ms=0, source_bytes=1)

        expected_captions, expected_segments = [], []
        for i in range(1000):
            camera = "cam1" if i % 2 == 0 else "cam2"
            if i % 5 == 4:
                segment = Segment(
                    camera_id=camera, start_ms=i * 10, end_ms=i * 10 + 5,
                    representative_text=f"segment {i}", frame_count=1 + i % 3,
                )
                store.append_segment(segment)
                expected_segments.append(segment)
            else:
                caption = mk_caption(camera, i * 10, f"caption number {i}")
                store.append_caption(caption)
                expected_captions.append(caption)

        assert store.scan("caption") == expected_captions
        assert store.scan("segment") == expected_segments

        # torn final line is reported with file and line, never skipped
        target = store.root / "captions" / "cam1" / "1970-01-01.ndjson"
        complete_lines = len(target.read_text().splitlines())
        with target.open("a", encoding="utf-8") as fh:
            fh.write('{"kind": "caption", "camera_id": "cam1", "appended')
        with pytest.raises(ParseError) as err:
            store.scan("caption")
        assert err.value.path == str(target)
        assert err.value.line_no == complete_lines + 1


def test_criterion_9_end_to_end_api(tmp_path):
    started = time.monotonic()
    with criterion(9, "end-to-end API"):
        base = 1_705_305_600_000
        config = AppConfig(store=StoreOptions(root=str(tmp_path / "store")))
        app = create_app(config)
        with TestClient(app) as client:
            for camera in ("cam_a", "cam_b"):
                response = client.post(
                    "/api/cameras",
                    json={"id": camera, "base_epoch_ms": base, "source_bytes": 10_485_760},
                )
                assert response.status_code == 201

            manifest_a = write_manifest(tmp_path / "a.ndjson", [
                (0, "a man in a red shirt walks"),
                (1000, "a man in a red shirt walks"),
                (2000, "an empty hallway"),
            ])
            manifest_b = write_manifest(tmp_path / "b.ndjson", [
                (12_000, "man with red shirt enters"),
                (13_000, "an empty stairwell"),
            ])
            jobs = []
            for camera, manifest in (("cam_a", manifest_a), ("cam_b", manifest_b)):
                response = client.post("/api/ingest", json={
                    "camera_id": camera, "kind": "metadata_only",
                    "path": str(manifest), "fps": 1, "duration_ms": 30_000,
                })
                assert response.status_code == 202
                jobs.append(response.json()["job_id"])

            for job_id in jobs:
                deadline = time.monotonic() + 20
                while time.monotonic() < deadline:
                    body = client.get(f"/api/jobs/{job_id}").json()
                    if body["phase"] in ("done", "failed"):
                        break
                    time.sleep(0.02)
                assert body["phase"] == "done"

            hits = client.get("/api/search", params={"q": "red shirt"}).json()
            assert hits
            tokens = set(normalize_tokens("red shirt"))
            for hit in hits:
                assert 0 < hit["score"] <= 1.0
                assert tokens & set(normalize_tokens(hit["text"]))
            scores = [h["score"] for h in hits]
            assert scores == sorted(scores, reverse=True)

            trace = client.get("/api/track", params={"q": "man red shirt"}).json()
            assert [h["camera_id"] for h in trace["hops"]] == ["cam_a", "cam_b"]
            for hop in trace["hops"]:
                assert set(normalize_tokens("man red shirt")) <= set(
                    normalize_tokens(hop["matched_text"])
                )

            # typed error bodies
            response = client.post("/api/ingest", json={
                "camera_id": "ghost", "kind": "metadata_only", "path": "x",
            })
            assert response.status_code == 404
            assert response.json()["error"] == "UnknownCamera"
            assert client.get("/api/jobs/missing").json()["error"] == "UnknownJob"
            assert client.get("/api/search", params={"q": "?"}).json()["error"] == "EmptyQuery"
        assert time.monotonic() - started < 30.0
