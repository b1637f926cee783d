"""In-process fake of the remote caption backend, for tests and demos.

Implements the same wire contract the real backend client speaks:

    POST /v1/caption  {"image_b64"?, "prompt", "temperature", "safety"}
      -> 200 {"text", "model_id"}
      -> 422 {"blocked": true, "category"} for safety refusals
      -> 429/5xx retryable failures

Responses are programmable three ways, checked in order: a FIFO script of
(status, body) pairs, then matching rules (request dict -> response or
None), then a fixed default. Every request is logged with a monotonic
timestamp so tests can audit rates, retries, and request contents.
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

Responder = Callable[[dict], "tuple[int, dict] | None"]


@dataclass
class LoggedRequest:
    t_monotonic: float
    path: str
    authorization: str
    body: dict


@dataclass
class FakeBackendServer:
    default_text: str = "a quiet scene"
    model_id: str = "fake-vlm-1"
    require_auth: bool = True

    script: deque = field(default_factory=deque)
    rules: list = field(default_factory=list)
    requests: list = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- programming ---------------------------------------------------------

    def push_response(self, status: int, body: dict) -> None:
        """Queue one response; scripted responses are consumed before rules."""
        with self._lock:
            self.script.append((status, body))

    def add_rule(self, rule: Responder) -> None:
        with self._lock:
            self.rules.append(rule)

    def reset(self) -> None:
        with self._lock:
            self.script.clear()
            self.rules.clear()
            self.requests.clear()

    def respond(self, request: LoggedRequest) -> tuple[int, dict]:
        with self._lock:
            self.requests.append(request)
            if self.require_auth and not request.authorization.startswith("Bearer "):
                return 401, {"error": "unauthorized"}
            if self.script:
                return self.script.popleft()
            for rule in self.rules:
                response = rule(request.body)
                if response is not None:
                    return response
            return 200, {"text": self.default_text, "model_id": self.model_id}

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> str:
        """Bind an ephemeral port and serve on a daemon thread; returns the URL."""
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("content-length", 0))
                try:
                    body = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    body = {}
                request = LoggedRequest(
                    t_monotonic=time.monotonic(),
                    path=self.path,
                    authorization=self.headers.get("authorization", ""),
                    body=body,
                )
                if self.path != "/v1/caption":
                    status, payload = 404, {"error": "not found"}
                    with outer._lock:
                        outer.requests.append(request)
                else:
                    status, payload = outer.respond(request)
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("content-type", "application/json")
                self.send_header("content-length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, fmt, *args):
                pass  # keep test output clean

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.endpoint

    @property
    def endpoint(self) -> str:
        if self._server is None:
            raise RuntimeError("server not started")
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "FakeBackendServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()
