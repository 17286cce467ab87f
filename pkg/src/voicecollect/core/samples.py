"""Sample-upload metadata: the one record type every layer passes around.

The audio bytes travel as a separate multipart part; everything here is
the metadata document. A sample either carries audio or is a text-only
submission with non-empty text.
"""

from __future__ import annotations

import random
import re
import uuid
from dataclasses import dataclass

from .errors import MalformedDocument
from .timeutil import parse_utc

_HASH_RE = re.compile(r"^[0-9a-f]{32}$")


def is_phone_hash(value: object) -> bool:
    """128-bit pseudonymous device id, rendered as 32 lowercase hex chars."""
    return isinstance(value, str) and _HASH_RE.match(value) is not None


def new_phone_hash(rng: random.Random | None = None) -> str:
    if rng is None:
        return uuid.uuid4().hex
    return f"{rng.getrandbits(128):032x}"


def new_sample_id(rng: random.Random | None = None) -> str:
    """Client-generated 128-bit idempotency key for one recording event."""
    if rng is None:
        return uuid.uuid4().hex
    return f"{rng.getrandbits(128):032x}"


@dataclass(frozen=True)
class SampleUpload:
    sample_id: str
    phone_hash: str
    timestamp: str  # ISO-8601 UTC, client-declared
    config_number: int
    language: str = "en"
    engine_number: int = 0
    list_index: int | None = None
    prompt_index: int | None = None
    prompt_text: str | None = None
    recorded_seconds: float | None = None
    text_input: str | None = None
    audio_media_type: str | None = None
    text_only: bool = False


def sample_to_doc(sample: SampleUpload) -> dict:
    return {
        "sample_id": sample.sample_id,
        "phone_hash": sample.phone_hash,
        "timestamp": sample.timestamp,
        "config_number": sample.config_number,
        "language": sample.language,
        "engine_number": sample.engine_number,
        "list_index": sample.list_index,
        "prompt_index": sample.prompt_index,
        "prompt_text": sample.prompt_text,
        "recorded_seconds": sample.recorded_seconds,
        "text_input": sample.text_input,
        "audio_media_type": sample.audio_media_type,
        "text_only": sample.text_only,
    }


def sample_from_doc(doc: object, *, has_audio: bool) -> SampleUpload:
    """Validate an uploaded metadata document.

    has_audio tells whether an audio part accompanied the metadata; the
    text-only flag and the audio/text invariant are checked against it.
    """
    if not isinstance(doc, dict):
        raise MalformedDocument("sample metadata must be a JSON object")

    sample_id = doc.get("sample_id")
    if not isinstance(sample_id, str) or not sample_id:
        raise MalformedDocument("sample_id must be a non-empty string")
    phone_hash = doc.get("phone_hash")
    if not is_phone_hash(phone_hash):
        raise MalformedDocument("phone_hash must be 32 lowercase hex characters")

    timestamp = doc.get("timestamp")
    if not isinstance(timestamp, str):
        raise MalformedDocument("timestamp must be an ISO-8601 string")
    try:
        parse_utc(timestamp)
    except ValueError as exc:
        raise MalformedDocument(f"timestamp: {exc}") from exc

    config_number = doc.get("config_number")
    if isinstance(config_number, bool) or not isinstance(config_number, int) or config_number < 0:
        raise MalformedDocument("config_number must be a non-negative integer")
    engine_number = doc.get("engine_number", 0)
    if isinstance(engine_number, bool) or not isinstance(engine_number, int) or engine_number < 0:
        raise MalformedDocument("engine_number must be a non-negative integer")
    language = doc.get("language", "en")
    if not isinstance(language, str) or not language:
        raise MalformedDocument("language must be a non-empty string")

    list_index = _opt_int(doc, "list_index")
    prompt_index = _opt_int(doc, "prompt_index")
    prompt_text = _opt_str(doc, "prompt_text")
    text_input = _opt_str(doc, "text_input")
    audio_media_type = _opt_str(doc, "audio_media_type")

    recorded_seconds = doc.get("recorded_seconds")
    if recorded_seconds is not None and (
        isinstance(recorded_seconds, bool)
        or not isinstance(recorded_seconds, (int, float))
        or recorded_seconds < 0
    ):
        raise MalformedDocument("recorded_seconds must be a non-negative number")

    if not has_audio and not (text_input or "").strip():
        raise MalformedDocument(
            "a sample needs audio, or non-empty text_input when text-only"
        )

    return SampleUpload(
        sample_id=sample_id,
        phone_hash=phone_hash,
        timestamp=timestamp,
        config_number=config_number,
        language=language,
        engine_number=engine_number,
        list_index=list_index,
        prompt_index=prompt_index,
        prompt_text=prompt_text,
        recorded_seconds=float(recorded_seconds) if recorded_seconds is not None else None,
        text_input=text_input,
        audio_media_type=audio_media_type if has_audio else None,
        text_only=not has_audio,
    )


def _opt_int(doc: dict, key: str) -> int | None:
    value = doc.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise MalformedDocument(f"{key} must be a non-negative integer or null")
    return value


def _opt_str(doc: dict, key: str) -> str | None:
    value = doc.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise MalformedDocument(f"{key} must be a string or null")
    return value
