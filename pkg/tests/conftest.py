import sys
from pathlib import Path

import pytest

from vigil.captioning import BackendConfig, Caption
from vigil.fakeserver import FakeBackendServer

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"
FAKE_DECODER = Path(__file__).resolve().parent / "fake_decoder.py"

TEST_KEY_ENV = "VIGIL_TEST_KEY"


def decoder_cmd() -> str:
    return f"{sys.executable} {FAKE_DECODER} {{input}} {{fps}} {{outdir}}"


def mk_caption(camera_id: str, offset_ms: int, text: str) -> Caption:
    return Caption(
        camera_id=camera_id, offset_ms=offset_ms, text=text, model_id="mock", latency_ms=0
    )


@pytest.fixture
def fake_server():
    with FakeBackendServer() as server:
        yield server


@pytest.fixture
def remote_config(fake_server, monkeypatch):
    monkeypatch.setenv(TEST_KEY_ENV, "test-key-123")
    return BackendConfig(
        kind="remote",
        endpoint=fake_server.endpoint,
        api_key_env=TEST_KEY_ENV,
        temperature=0.0,
        max_retries=3,
        rate_limit_rps=50.0,
        concurrency=4,
        safety=(("dangerous_content", "block_some"),),
    )


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR
