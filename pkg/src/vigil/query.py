"""Operator-facing retrieval over the store.

search  — ranked keyword lookup over segments and summary lines; the score
          is plain token coverage (matched / total query tokens), which keeps
          every ranking hand-checkable on small windows.
track   — spatiotemporal entity tracing (all query tokens must match).
ask     — optional question answering: top search hits become the context
          a text backend answers from, and the exact context used is
          returned alongside the answer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .captioning import BackendConfig, MockBackend, PromptTemplate, RemoteBackend, render_prompt
from .condense import format_observations, normalize_tokens
from .datastore import Store
from .errors import EmptyQuery
from .fusion import EntityTrace, correlate_entity
from .fusion import DEFAULT_MERGE_GAP_MS

MAX_WINDOW_MS = 2**62
DEFAULT_ASK_CONTEXT_K = 20

DEFAULT_ASK_PROMPT = PromptTemplate(
    id="ask_default",
    body="You are reviewing CCTV observation logs. Using only the observations "
    "below, answer the operator's question concisely.\n\nQuestion: {question}\n\n"
    "Observations:\n{observations}",
)

NO_OBSERVATIONS_ANSWER = "no relevant observations"


@dataclass(frozen=True)
class SearchHit:
    kind: str
    camera_id: str
    start_ms: int
    end_ms: int
    text: str
    score: float


@dataclass(frozen=True)
class Answer:
    answer: str
    context: tuple[SearchHit, ...]
    model_id: str | None = None


def _window(from_ms: int | None, to_ms: int | None) -> tuple[int, int]:
    return (from_ms if from_ms is not None else 0,
            to_ms if to_ms is not None else MAX_WINDOW_MS)


def _candidates(
    store: Store,
    camera_id: str | None,
    from_ms: int | None,
    to_ms: int | None,
) -> list[tuple[str, str, int, int, str]]:
    """(kind, camera_id, start, end, text) candidates inside the window."""
    window = _window(from_ms, to_ms)
    rows = [
        ("segment", s.camera_id, s.start_ms, s.end_ms, s.representative_text)
        for s in store.scan("segment", camera_id, from_ms, to_ms)
    ]
    # Summary records are filed under their window start, which may predate
    # the queried window; scan without a time filter and window the lines
    # by start time, matching the segment scan's convention.
    for summary in store.scan("camera_summary", camera_id):
        for start, end, text in summary.lines:
            if window[0] <= start <= window[1]:
                rows.append(("camera_summary", summary.camera_id, start, end, text))
    for summary in store.scan("network_summary"):
        for line_camera, start, end, text in summary.lines:
            if camera_id is not None and line_camera != camera_id:
                continue
            if window[0] <= start <= window[1]:
                rows.append(("network_summary", line_camera, start, end, text))
    return rows


def search(
    store: Store,
    q: str,
    camera_id: str | None = None,
    from_ms: int | None = None,
    to_ms: int | None = None,
    limit: int = 20,
) -> list[SearchHit]:
    """Rank stored texts by query-token coverage, best and most recent first."""
    if limit <= 0:
        raise ValueError("limit must be positive")
    tokens = set(normalize_tokens(q))
    if not tokens:
        raise EmptyQuery("query has no searchable tokens")
    hits: list[SearchHit] = []
    for kind, cam, start, end, text in _candidates(store, camera_id, from_ms, to_ms):
        matched = len(tokens & set(normalize_tokens(text)))
        if matched == 0:
            continue
        hits.append(
            SearchHit(
                kind=kind,
                camera_id=cam,
                start_ms=start,
                end_ms=end,
                text=text,
                score=matched / len(tokens),
            )
        )
    hits.sort(key=lambda h: (-h.score, -h.start_ms, h.camera_id))
    return hits[:limit]


def track(
    store: Store,
    q: str,
    from_ms: int | None = None,
    to_ms: int | None = None,
    merge_gap_ms: int = DEFAULT_MERGE_GAP_MS,
) -> EntityTrace:
    """Trace an entity across cameras from stored segments."""
    segments = store.scan("segment", None, from_ms, to_ms)
    return correlate_entity(segments, q, _window(from_ms, to_ms), merge_gap_ms)


def ask(
    store: Store,
    question: str,
    from_ms: int | None = None,
    to_ms: int | None = None,
    config: BackendConfig | None = None,
    template: PromptTemplate = DEFAULT_ASK_PROMPT,
    backend: MockBackend | RemoteBackend | None = None,
    top_k: int = DEFAULT_ASK_CONTEXT_K,
) -> Answer:
    """Answer a question over the top-K retrieved observations.

    With nothing retrieved the sentinel answer comes back without any
    backend call; otherwise the answer always ships with the exact context
    lines that were shown to the model.
    """
    hits = search(store, question, None, from_ms, to_ms, limit=top_k)
    if not hits:
        return Answer(answer=NO_OBSERVATIONS_ANSWER, context=())
    observations = format_observations(
        (h.start_ms, h.end_ms, f"[{h.camera_id}] {h.text}") for h in hits
    )
    prompt = render_prompt(template, {"question": question, "observations": observations})
    own_backend = backend is None
    if backend is None:
        if config is None:
            raise ValueError("ask requires a backend config")
        backend = RemoteBackend(config)
    try:
        text, model_id = backend.generate(prompt)
    finally:
        if own_backend:
            backend.close()
    return Answer(answer=text, context=tuple(hits), model_id=model_id)
