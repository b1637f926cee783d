"""Per-frame captioning through a pluggable backend.

Two backends: ``mock`` replays each frame's scripted text verbatim (the
deterministic offline path), ``remote`` speaks a small HTTP wire contract
to any vision-language service (see RemoteBackend). The remote client
retries transient failures with exponential backoff and keeps under a
configured requests-per-second budget.
"""

from __future__ import annotations

import base64
import math
import os
import random
import re
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import httpx

from .errors import (
    BackendUnavailable,
    CredentialMissing,
    EmptyCaption,
    JobAborted,
    MissingPlaceholder,
    SafetyBlocked,
)
from .ingest import FrameSample

SAFETY_CATEGORIES = ("harassment", "hate_speech", "sexual_content", "dangerous_content")
SAFETY_THRESHOLDS = ("block_none", "block_some", "block_most")

BACKOFF_BASE_S = 0.5
BACKOFF_FACTOR = 2.0
BACKOFF_JITTER = 0.2

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass(frozen=True)
class BackendConfig:
    """Captioning backend selection plus request-shaping knobs."""

    kind: str = "mock"
    endpoint: str | None = None
    api_key_env: str = "VIGIL_API_KEY"
    temperature: float = 0.0
    max_retries: int = 3
    rate_limit_rps: float = 2.0
    concurrency: int = 2
    safety: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.kind not in ("mock", "remote"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote backend requires an endpoint")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError(f"temperature must be in [0,1], got {self.temperature}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")
        if self.rate_limit_rps <= 0:
            raise ValueError("rate_limit_rps must be positive")
        if self.concurrency <= 0:
            raise ValueError("concurrency must be positive")
        for category, threshold in self.safety:
            if category not in SAFETY_CATEGORIES:
                raise ValueError(f"unknown safety category {category!r}")
            if threshold not in SAFETY_THRESHOLDS:
                raise ValueError(f"unknown safety threshold {threshold!r}")


@dataclass(frozen=True)
class Caption:
    """Timestamped free-text description of one frame."""

    camera_id: str
    offset_ms: int
    text: str
    model_id: str
    latency_ms: int = 0

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("caption text must be nonempty")
        if self.offset_ms < 0 or self.latency_ms < 0:
            raise ValueError("offset_ms and latency_ms must be nonnegative")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str


DEFAULT_FRAME_PROMPT = PromptTemplate(
    id="frame_default",
    body="Describe this image, focusing on people, their actions, interactions, "
    "and notable objects or events.",
)


def render_prompt(template: PromptTemplate, vars: dict[str, str] | None = None) -> str:
    """Substitute {placeholder} slots verbatim; no recursive expansion."""
    bindings = vars or {}

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise MissingPlaceholder(name)
        return bindings[name]

    return _PLACEHOLDER.sub(_sub, template.body)


class RateLimiter:
    """Sliding-window request limiter, safe across threads.

    Admits a request only when fewer than ``quota`` requests happened inside
    the trailing window. Window is stretched 5% past the budget period so
    that requests measured at the receiving end (small transit jitter) still
    never exceed rate_per_s in any 1-second window. Rates below 1 rps are
    enforced as minimum spacing between consecutive requests.
    """

    def __init__(self, rate_per_s: float):
        if rate_per_s <= 0:
            raise ValueError("rate must be positive")
        self.quota = max(1, math.floor(rate_per_s))
        self.window_s = max(1.0, self.quota / rate_per_s) * 1.05
        self._times: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                while self._times and self._times[0] <= now - self.window_s:
                    self._times.popleft()
                if len(self._times) < self.quota:
                    self._times.append(now)
                    return
                wait = self._times[0] + self.window_s - now
            time.sleep(max(wait, 0.001))


@dataclass
class BackendMetrics:
    """Counters the remote client accumulates across calls."""

    requests: int = 0
    retries: int = 0
    safety_blocks: int = 0
    failures: int = 0


class MockBackend:
    """Replays each frame's scripted text; pure and instantaneous."""

    model_id = "mock"

    def __init__(self):
        self.metrics = BackendMetrics()

    def caption_image(self, image_b64: str, prompt: str) -> tuple[str, str]:
        raise BackendUnavailable("mock backend cannot caption real images")

    def generate(self, prompt: str) -> tuple[str, str]:
        raise BackendUnavailable("mock backend cannot generate free text")

    def close(self) -> None:
        pass


class RemoteBackend:
    """HTTP client for the caption wire contract.

    Request:  POST {endpoint}/v1/caption with bearer auth and a JSON body
              {"image_b64", "prompt", "temperature", "safety"} (image_b64
              omitted for text-only generation).
    Response: 200 {"text", "model_id"}; 422 {"blocked": true, "category"}
              maps to SafetyBlocked; 429/5xx and transport errors retry with
              exponential backoff until max_retries is exhausted.
    """

    def __init__(self, config: BackendConfig, timeout_s: float = 30.0):
        if config.kind != "remote":
            raise ValueError("RemoteBackend requires kind=remote")
        key = os.environ.get(config.api_key_env, "")
        if not key:
            raise CredentialMissing(f"environment variable {config.api_key_env} not set")
        self.config = config
        self.metrics = BackendMetrics()
        self._metrics_lock = threading.Lock()
        self._limiter = RateLimiter(config.rate_limit_rps)
        self._client = httpx.Client(
            base_url=config.endpoint.rstrip("/"),
            headers={"authorization": f"Bearer {key}"},
            timeout=timeout_s,
        )

    def caption_image(self, image_b64: str, prompt: str) -> tuple[str, str]:
        return self._post({"image_b64": image_b64, "prompt": prompt})

    def generate(self, prompt: str) -> tuple[str, str]:
        return self._post({"prompt": prompt})

    def close(self) -> None:
        self._client.close()

    def _post(self, body: dict) -> tuple[str, str]:
        payload = dict(body)
        payload["temperature"] = self.config.temperature
        payload["safety"] = [
            {"category": c, "threshold": t} for c, t in self.config.safety
        ]
        attempts = self.config.max_retries + 1
        last_failure = "no attempt made"
        for attempt in range(attempts):
            if attempt > 0:
                delay = BACKOFF_BASE_S * BACKOFF_FACTOR ** (attempt - 1)
                delay *= random.uniform(1 - BACKOFF_JITTER, 1 + BACKOFF_JITTER)
                time.sleep(delay)
                with self._metrics_lock:
                    self.metrics.retries += 1
            self._limiter.acquire()
            with self._metrics_lock:
                self.metrics.requests += 1
            try:
                response = self._client.post("/v1/caption", json=payload)
            except httpx.HTTPError as exc:
                last_failure = f"transport error: {exc}"
                continue
            if response.status_code == 200:
                data = response.json()
                text = (data.get("text") or "").strip()
                if not text:
                    raise EmptyCaption("backend returned blank text")
                return text, data.get("model_id", "remote")
            if response.status_code == 422:
                data = response.json()
                if data.get("blocked"):
                    with self._metrics_lock:
                        self.metrics.safety_blocks += 1
                    raise SafetyBlocked(data.get("category", "unspecified"))
            if response.status_code == 429 or response.status_code >= 500:
                last_failure = f"HTTP {response.status_code}"
                continue
            with self._metrics_lock:
                self.metrics.failures += 1
            raise BackendUnavailable(f"unexpected HTTP {response.status_code}")
        with self._metrics_lock:
            self.metrics.failures += 1
        raise BackendUnavailable(
            f"retries exhausted after {attempts} attempts ({last_failure})"
        )


def open_backend(config: BackendConfig) -> MockBackend | RemoteBackend:
    return MockBackend() if config.kind == "mock" else RemoteBackend(config)


def caption_frame(
    frame: FrameSample,
    config: BackendConfig,
    prompt: str,
    backend: MockBackend | RemoteBackend | None = None,
) -> Caption:
    """Caption one frame. Mock frames must carry scripted_text, remote an image."""
    if config.kind == "mock":
        if frame.scripted_text is None:
            raise ValueError(f"mock backend needs scripted_text (offset {frame.offset_ms})")
        text = frame.scripted_text.strip()
        if not text:
            raise EmptyCaption(f"blank scripted text at offset {frame.offset_ms}")
        return Caption(
            camera_id=frame.camera_id,
            offset_ms=frame.offset_ms,
            text=text,
            model_id="mock",
            latency_ms=0,
        )

    if frame.image_ref is None:
        raise ValueError(f"remote backend needs image_ref (offset {frame.offset_ms})")
    own_backend = backend is None
    backend = backend or RemoteBackend(config)
    try:
        with open(frame.image_ref, "rb") as fh:
            image_b64 = base64.b64encode(fh.read()).decode("ascii")
        started = time.monotonic()
        text, model_id = backend.caption_image(image_b64, prompt)
        latency_ms = int((time.monotonic() - started) * 1000)
        return Caption(
            camera_id=frame.camera_id,
            offset_ms=frame.offset_ms,
            text=text,
            model_id=model_id,
            latency_ms=latency_ms,
        )
    finally:
        if own_backend:
            backend.close()


@dataclass(frozen=True)
class GapReport:
    """One frame the backend never captioned, with the terminal error."""

    offset_ms: int
    error: str
    message: str


@dataclass
class CaptionBatch:
    captions: list[Caption] = field(default_factory=list)
    gaps: list[GapReport] = field(default_factory=list)
    retries: int = 0


def caption_stream(
    frames: list[FrameSample],
    config: BackendConfig,
    prompt: str,
    backend: MockBackend | RemoteBackend | None = None,
) -> CaptionBatch:
    """Caption a whole frame stream, at most config.concurrency calls in flight.

    Frames that fail after retries become gaps rather than aborting the run;
    JobAborted is raised only when every frame fails. Output is sorted by
    offset regardless of completion order.
    """
    if not frames:
        return CaptionBatch()
    own_backend = backend is None
    backend = backend or open_backend(config)

    def _one(frame: FrameSample) -> tuple[int, Caption | Exception]:
        try:
            return frame.offset_ms, caption_frame(frame, config, prompt, backend)
        except Exception as exc:
            return frame.offset_ms, exc

    try:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            results = list(pool.map(_one, frames))
    finally:
        if own_backend:
            backend.close()

    batch = CaptionBatch(retries=backend.metrics.retries)
    for offset, outcome in sorted(results, key=lambda r: r[0]):
        if isinstance(outcome, Caption):
            batch.captions.append(outcome)
        else:
            name = outcome.name if hasattr(outcome, "name") else type(outcome).__name__
            batch.gaps.append(GapReport(offset_ms=offset, error=name, message=str(outcome)))
    if not batch.captions:
        raise JobAborted(
            f"all {len(frames)} frames failed; first: {batch.gaps[0].message}"
        )
    return batch
