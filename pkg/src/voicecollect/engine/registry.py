"""Numbered processing engines applied to ingested samples.

Engine 0 is permanently "none": samples are stored and nothing answers.
An echo engine acknowledges each sample with a deterministic text; a
remote engine forwards the sample to an external endpoint and relays the
plain-text reply. Whatever an engine produces is written as the phone's
current response.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from enum import Enum

import httpx

from ..core import SampleUpload, format_utc, sample_to_doc, utc_now

logger = logging.getLogger(__name__)

REMOTE_TIMEOUT_SECONDS = 10.0


class ReservedNumber(ValueError):
    """Engine number 0 is hard-wired to no processing."""


class RemoteUnreachable(Exception):
    """The remote engine endpoint could not produce a reply."""


class EngineKind(str, Enum):
    NONE = "none"
    ECHO = "echo"
    REMOTE = "remote"


@dataclass(frozen=True)
class EngineSpec:
    number: int
    kind: EngineKind
    endpoint: str | None = None


@dataclass(frozen=True)
class EngineResponse:
    phone_hash: str
    text: str | None = None
    audio: bytes | None = None
    audio_media_type: str | None = None
    produced_at: str = ""


class EngineRegistry:
    """Thread-safe number → engine table; number 0 cannot be re-registered."""

    def __init__(self):
        self._lock = threading.Lock()
        self._specs: dict[int, EngineSpec] = {0: EngineSpec(0, EngineKind.NONE)}

    def register(self, spec: EngineSpec) -> None:
        if spec.number == 0:
            raise ReservedNumber("engine number 0 always means no processing")
        if spec.kind is EngineKind.REMOTE and not spec.endpoint:
            raise ValueError("remote engines need an endpoint")
        with self._lock:
            self._specs[spec.number] = spec

    def get(self, number: int) -> EngineSpec:
        with self._lock:
            return self._specs.get(number, EngineSpec(number, EngineKind.NONE))

    def numbers(self) -> list[int]:
        with self._lock:
            return sorted(self._specs)


def run_engine(
    spec: EngineSpec,
    sample: SampleUpload,
    audio: bytes | None,
    phone_sample_count: int,
) -> EngineResponse | None:
    """Produce this engine's answer for one stored sample, if any.

    Never touches the sample store; raises RemoteUnreachable instead of
    failing silently so the dispatcher can log and move on.
    """
    if spec.kind is EngineKind.NONE:
        return None
    if spec.kind is EngineKind.ECHO:
        text = f"received sample {sample.sample_id} ({phone_sample_count} total for this phone)"
        return EngineResponse(
            phone_hash=sample.phone_hash, text=text, produced_at=format_utc(utc_now())
        )
    assert spec.kind is EngineKind.REMOTE and spec.endpoint
    return _call_remote(spec.endpoint, sample, audio)


def _call_remote(endpoint: str, sample: SampleUpload, audio: bytes | None) -> EngineResponse:
    # Same multipart shape as the ingest endpoint: metadata part + audio part.
    files = {}
    if audio is not None:
        files["audio"] = (
            "audio",
            audio,
            sample.audio_media_type or "application/octet-stream",
        )
    data = {"metadata": json.dumps(sample_to_doc(sample), ensure_ascii=False)}
    try:
        reply = httpx.post(endpoint, data=data, files=files, timeout=REMOTE_TIMEOUT_SECONDS)
        reply.raise_for_status()
    except httpx.HTTPError as exc:
        raise RemoteUnreachable(f"{endpoint}: {exc}") from exc
    return EngineResponse(
        phone_hash=sample.phone_hash,
        text=reply.text,
        produced_at=format_utc(utc_now()),
    )


def parse_engine_flag(value: str) -> EngineSpec:
    """Parse an `<number>=<kind[:url]>` registration flag."""
    try:
        number_part, kind_part = value.split("=", 1)
        number = int(number_part)
    except ValueError as exc:
        raise ValueError(f"bad engine flag {value!r}, expected <number>=<kind[:url]>") from exc
    kind_name, _, endpoint = kind_part.partition(":")
    try:
        kind = EngineKind(kind_name)
    except ValueError as exc:
        raise ValueError(f"unknown engine kind {kind_name!r}") from exc
    if kind is EngineKind.REMOTE and not endpoint:
        raise ValueError("remote engines need an endpoint: <number>=remote:<url>")
    return EngineSpec(number=number, kind=kind, endpoint=endpoint or None)
