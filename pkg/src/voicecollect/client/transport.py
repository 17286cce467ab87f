"""Network transport for the client: one class per wire, easy to fake.

All failures (connect, timeout, non-2xx except the documented 404s)
surface as TransportError so callers can treat "offline" uniformly.
"""

from __future__ import annotations

import json
from typing import Protocol

import httpx


class TransportError(Exception):
    """The server could not be reached or rejected the request."""


class Transport(Protocol):
    def fetch_config(self, number: int, timeout: float) -> bytes: ...

    def upload_sample(
        self, doc: dict, audio: bytes | None, audio_media_type: str | None
    ) -> dict: ...

    def upload_status(self, phone_hash: str, doc: dict) -> None: ...

    def fetch_response(self, phone_hash: str) -> dict | None: ...


class HttpTransport:
    def __init__(self, server_url: str, timeout: float = 10.0):
        self.server_url = server_url.rstrip("/")
        self.timeout = timeout
        self._client = httpx.Client(base_url=self.server_url, timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def fetch_config(self, number: int, timeout: float) -> bytes:
        try:
            resp = self._client.get(f"/config/{number}", timeout=timeout)
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        return resp.content

    def upload_sample(
        self, doc: dict, audio: bytes | None, audio_media_type: str | None
    ) -> dict:
        # Always multipart, even text-only: (None, value) makes a plain part.
        files: dict = {"metadata": (None, json.dumps(doc, ensure_ascii=False))}
        if audio is not None:
            files["audio"] = ("audio", audio, audio_media_type or "application/octet-stream")
        try:
            resp = self._client.post("/samples", files=files)
            resp.raise_for_status()
            return resp.json()
        except (httpx.HTTPError, json.JSONDecodeError) as exc:
            raise TransportError(str(exc)) from exc

    def upload_status(self, phone_hash: str, doc: dict) -> None:
        try:
            resp = self._client.post(f"/status/{phone_hash}", json=doc)
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc

    def upload_config(self, raw: bytes) -> dict:
        try:
            resp = self._client.post("/admin/config", content=raw)
            resp.raise_for_status()
            return resp.json()
        except httpx.HTTPStatusError as exc:
            # The rejection body says what was wrong with the config; keep it.
            detail = exc.response.text.strip()
            raise TransportError(f"{exc}\n{detail}" if detail else str(exc)) from exc
        except (httpx.HTTPError, json.JSONDecodeError) as exc:
            raise TransportError(str(exc)) from exc

    def fetch_response(self, phone_hash: str) -> dict | None:
        try:
            resp = self._client.get(f"/response/{phone_hash}")
            if resp.status_code == 404:
                return None
            resp.raise_for_status()
            return resp.json()
        except (httpx.HTTPError, json.JSONDecodeError) as exc:
            raise TransportError(str(exc)) from exc
