import pytest

from vigil.condense import CameraSummary, Segment, normalize_tokens
from vigil.datastore import Store
from vigil.errors import EmptyQuery
from vigil.query import NO_OBSERVATIONS_ANSWER, ask, search, track


def seg(camera, start, end, text):
    return Segment(camera_id=camera, start_ms=start, end_ms=end,
                   representative_text=text, frame_count=1)


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path / "store")
    s.register_camera("cam_a", base_epoch_ms=0)
    s.register_camera("cam_b", base_epoch_ms=0)
    s.append_segment(seg("cam_a", 0, 10_000, "a man in a red shirt walks"))
    s.append_segment(seg("cam_b", 12_000, 20_000, "man with red shirt enters"))
    s.append_segment(seg("cam_a", 30_000, 35_000, "a red car parked outside"))
    s.append_segment(seg("cam_b", 40_000, 45_000, "an empty hallway"))
    return s


class TestSearch:
    def test_full_match_score(self, store):
        hits = search(store, "red shirt")
        assert hits[0].score == 1.0
        assert "red shirt" in hits[0].text

    def test_partial_match_ranks_below(self, store):
        hits = search(store, "red shirt")
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)
        partial = [h for h in hits if h.score == 0.5]
        assert len(partial) == 1
        assert partial[0].text == "a red car parked outside"

    def test_no_match_empty(self, store):
        assert search(store, "giraffe") == []

    def test_empty_query(self, store):
        with pytest.raises(EmptyQuery):
            search(store, "...")

    def test_every_hit_contains_a_query_token(self, store):
        tokens = set(normalize_tokens("red shirt"))
        for hit in search(store, "red shirt"):
            assert tokens & set(normalize_tokens(hit.text))

    def test_score_one_contains_all_tokens(self, store):
        tokens = set(normalize_tokens("red shirt"))
        for hit in search(store, "red shirt"):
            if hit.score == 1.0:
                assert tokens <= set(normalize_tokens(hit.text))

    def test_recency_tiebreak(self, store):
        # both score 1.0 on "red shirt": cam_b@12000 ranks above cam_a@0
        hits = [h for h in search(store, "red shirt") if h.score == 1.0]
        assert [h.camera_id for h in hits] == ["cam_b", "cam_a"]

    def test_limit_truncates(self, store):
        assert len(search(store, "red", limit=1)) == 1

    def test_camera_filter(self, store):
        hits = search(store, "red", camera_id="cam_a")
        assert {h.camera_id for h in hits} == {"cam_a"}

    def test_window_filter(self, store):
        hits = search(store, "red", from_ms=25_000, to_ms=50_000)
        assert [h.text for h in hits] == ["a red car parked outside"]

    def test_summary_lines_are_candidates(self, store):
        store.append_camera_summary(
            CameraSummary(
                camera_id="cam_a", window=(0, 50_000),
                lines=((46_000, 47_000, "a green bicycle leans on the wall"),),
                strategy="extractive",
            )
        )
        hits = search(store, "green bicycle")
        assert hits[0].kind == "camera_summary"

    def test_adding_records_never_lowers_scores(self, store):
        before = {(h.camera_id, h.start_ms): h.score for h in search(store, "red shirt", limit=50)}
        store.append_segment(seg("cam_a", 60_000, 61_000, "another red shirt sighting"))
        after = {(h.camera_id, h.start_ms): h.score for h in search(store, "red shirt", limit=50)}
        for key, score in before.items():
            assert after[key] == score


class TestTrack:
    def test_cross_camera_roundtrip(self, store):
        trace = track(store, "man red shirt")
        assert [(h[0], h[1], h[2]) for h in trace.hops] == [
            ("cam_a", 0, 10_000),
            ("cam_b", 12_000, 20_000),
        ]

    def test_empty_store(self, tmp_path):
        assert track(Store(tmp_path / "fresh"), "man").hops == ()

    def test_window_excluding_matches(self, store):
        assert track(store, "man red shirt", from_ms=100_000).hops == ()

    def test_hops_subset_of_full_score_segment_hits(self, store):
        trace = track(store, "red shirt")
        full = {
            (h.camera_id, h.text)
            for h in search(store, "red shirt", limit=100)
            if h.score == 1.0 and h.kind == "segment"
        }
        for cam, _, _, text in trace.hops:
            assert (cam, text) in full


class TestAsk:
    def test_fixture_answer_with_context(self, store, fake_server, remote_config):
        fake_server.push_response(200, {"text": "He crossed from A to B.", "model_id": "fake-vlm-1"})
        result = ask(store, "where did the man in the red shirt go", config=remote_config)
        assert result.answer == "He crossed from A to B."
        assert len(result.context) > 0

    def test_no_hits_short_circuits(self, tmp_path, fake_server, remote_config):
        empty = Store(tmp_path / "fresh")
        result = ask(empty, "any sign of a giraffe", config=remote_config)
        assert result.answer == NO_OBSERVATIONS_ANSWER
        assert result.context == ()
        assert fake_server.requests == []

    def test_context_capped_at_k(self, tmp_path, fake_server, remote_config):
        s = Store(tmp_path / "big")
        s.register_camera("cam_a", base_epoch_ms=0)
        for i in range(30):
            s.append_segment(seg("cam_a", i * 1000, i * 1000 + 500, f"red marker number {i}"))
        result = ask(s, "red marker", config=remote_config, top_k=20)
        assert len(result.context) == 20
        prompt = fake_server.requests[0].body["prompt"]
        assert prompt.count("[cam_a]") == 20

    def test_context_is_what_model_saw(self, store, fake_server, remote_config):
        result = ask(store, "red shirt", config=remote_config)
        prompt = fake_server.requests[0].body["prompt"]
        for hit in result.context:
            assert hit.text in prompt
