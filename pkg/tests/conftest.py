"""Shared fixtures: in-process API client and a live socket server."""

from __future__ import annotations

import socket
import threading
import time

import httpx
import pytest
import uvicorn

from voicecollect.core import (
    PromptList,
    PromptPair,
    RuntimeConfig,
    format_utc,
    new_phone_hash,
    new_sample_id,
    serialize_runtime_config,
    utc_now,
)
from voicecollect.engine import EngineKind, EngineRegistry, EngineSpec
from voicecollect.server import CollectionService, create_app


def guided_config(number: int = 3) -> RuntimeConfig:
    """Two selectable lists; list B has a text-only step and a terminal."""
    list_a = PromptList(
        prompts=(
            PromptPair("cough three times", 5),
            PromptPair("say aaah", 10),
            PromptPair("read: the quick brown fox", 8),
        )
    )
    list_b = PromptList(
        prompts=(
            PromptPair("hum for ten seconds", 10),
            PromptPair("describe how you feel", None),
            PromptPair("thank you please record again tomorrow", None),
        )
    )
    return RuntimeConfig(
        config_number=number,
        selector_string="Choose your prompt list",
        lists=(list_a, list_b),
    )


def make_sample_doc(phone_hash: str | None = None, **overrides) -> dict:
    doc = {
        "sample_id": new_sample_id(),
        "phone_hash": phone_hash or new_phone_hash(),
        "timestamp": format_utc(utc_now()),
        "config_number": 3,
        "language": "en",
        "engine_number": 0,
    }
    doc.update(overrides)
    return doc


@pytest.fixture()
def service(tmp_path):
    registry = EngineRegistry()
    registry.register(EngineSpec(number=1, kind=EngineKind.ECHO))
    svc = CollectionService(tmp_path / "data", registry=registry)
    svc.apply_admin_config(serialize_runtime_config(guided_config(3)))
    yield svc
    svc.close()


@pytest.fixture()
def api(service):
    from fastapi.testclient import TestClient

    with TestClient(create_app(service)) as client:
        yield client


class LiveServer:
    """A real uvicorn instance on an ephemeral localhost port."""

    def __init__(self, service: CollectionService):
        self.service = service
        self.data_root = service.store.root
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        self.port = sock.getsockname()[1]
        sock.close()
        self.url = f"http://127.0.0.1:{self.port}"
        config = uvicorn.Config(
            create_app(service), host="127.0.0.1", port=self.port, log_level="warning"
        )
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> None:
        self._thread.start()
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            try:
                if httpx.get(f"{self.url}/healthz", timeout=1.0).status_code == 200:
                    return
            except httpx.HTTPError:
                time.sleep(0.05)
        raise RuntimeError("server did not come up")

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)
        self.service.close()


@pytest.fixture()
def live_server(tmp_path):
    registry = EngineRegistry()
    registry.register(EngineSpec(number=1, kind=EngineKind.ECHO))
    svc = CollectionService(tmp_path / "data", registry=registry)
    svc.apply_admin_config(serialize_runtime_config(guided_config(3)))
    server = LiveServer(svc)
    server.start()
    yield server
    server.stop()
