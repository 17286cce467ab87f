"""Client settings/status document and its decision rules.

LocalConfigStatus holds every user-tunable setting plus the recording
counters. Serialized as-is (snake_case, ISO-8601 UTC timestamps) it is the
status document the client uploads when settings change or after
reset_time minutes of recording inactivity.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

from .errors import CodesExhausted, MalformedDocument, NoEndpoint
from .personal_info import FORBIDDEN_QUESTION_IDS
from .timeutil import format_utc, parse_utc

DEFAULT_DYNAMIC_ENDPOINT = "http://voice.mit.edu"
DEFAULT_RESET_TIME_MINUTES = 30
DEFAULT_LANGUAGES = ("en", "es", "ca")

NEIGHBOR_CODE_DIGITS = 6
_CODE_SPACE = 10**NEIGHBOR_CODE_DIGITS


@dataclass(frozen=True)
class LocalConfigStatus:
    language: str = "en"
    study_code: str | None = None
    personal_info: dict[str, object] = field(default_factory=dict)
    generated_neighbor_codes: tuple[str, ...] = ()
    entered_neighbor_codes: tuple[str, ...] = ()
    run_time_file_config_number: int = 0
    total_count: int = 0
    current_count: int = 0
    reset_time: float = DEFAULT_RESET_TIME_MINUTES
    engine_number: int = 0
    vns_number: str = ""
    dynamic_vns_toggle: bool = True
    dynamic_vns: str | None = None
    dirty: bool = False
    ui_color: str = ""
    last_recording_time: datetime | None = None


def reset_counts(status: LocalConfigStatus) -> LocalConfigStatus:
    """Archive the visible counter: total += current, current = 0."""
    return replace(
        status,
        total_count=status.total_count + status.current_count,
        current_count=0,
        dirty=True,
    )


def should_upload_status(status: LocalConfigStatus, now: datetime) -> bool:
    """Upload when the user changed something, or strictly more than
    reset_time minutes passed since the last recording."""
    if status.dirty:
        return True
    if status.last_recording_time is None:
        return False
    return now - status.last_recording_time > timedelta(minutes=status.reset_time)


def resolve_server_endpoint(status: LocalConfigStatus) -> str:
    """Which server this phone talks to.

    Dynamic resolution on: the dynamic address, falling back to the fixed
    well-known endpoint. Off: the statically configured address.
    """
    if status.dynamic_vns_toggle:
        return status.dynamic_vns or DEFAULT_DYNAMIC_ENDPOINT
    if not status.vns_number:
        raise NoEndpoint("dynamic resolution is off and vns_number is empty")
    return status.vns_number


def generate_neighbor_code(rng: random.Random, existing: set[str]) -> str:
    """A fresh 6-decimal-digit code, shareable verbally, never a repeat."""
    if len(existing) >= _CODE_SPACE:
        raise CodesExhausted(f"all {_CODE_SPACE} codes taken")
    while True:
        code = f"{rng.randrange(_CODE_SPACE):0{NEIGHBOR_CODE_DIGITS}d}"
        if code not in existing:
            return code


# --- wire document ----------------------------------------------------------

_REQUIRED_FIELDS: dict[str, type | tuple[type, ...]] = {
    "language": str,
    "personal_info": dict,
    "generated_neighbor_codes": list,
    "entered_neighbor_codes": list,
    "run_time_file_config_number": int,
    "total_count": int,
    "current_count": int,
    "reset_time": (int, float),
    "engine_number": int,
    "vns_number": str,
    "dynamic_vns_toggle": bool,
    "dirty": bool,
    "ui_color": str,
}
_OPTIONAL_FIELDS = ("study_code", "dynamic_vns", "last_recording_time")


def status_to_doc(status: LocalConfigStatus) -> dict:
    return {
        "language": status.language,
        "study_code": status.study_code,
        "personal_info": dict(status.personal_info),
        "generated_neighbor_codes": list(status.generated_neighbor_codes),
        "entered_neighbor_codes": list(status.entered_neighbor_codes),
        "run_time_file_config_number": status.run_time_file_config_number,
        "total_count": status.total_count,
        "current_count": status.current_count,
        "reset_time": status.reset_time,
        "engine_number": status.engine_number,
        "vns_number": status.vns_number,
        "dynamic_vns_toggle": status.dynamic_vns_toggle,
        "dynamic_vns": status.dynamic_vns,
        "dirty": status.dirty,
        "ui_color": status.ui_color,
        "last_recording_time": (
            format_utc(status.last_recording_time)
            if status.last_recording_time is not None
            else None
        ),
    }


def validate_status_doc(doc: object) -> dict:
    """Schema-check an uploaded status document; returns it unchanged.

    Rejects wrong shapes, negative counters, and any personal_info entry
    keyed by a forbidden identifier.
    """
    if not isinstance(doc, dict):
        raise MalformedDocument("status document must be a JSON object")
    unknown = set(doc) - set(_REQUIRED_FIELDS) - set(_OPTIONAL_FIELDS)
    if unknown:
        raise MalformedDocument(f"unknown status fields: {sorted(unknown)}")
    for key, expected in _REQUIRED_FIELDS.items():
        if key not in doc:
            raise MalformedDocument(f"missing status field: {key}")
        value = doc[key]
        if isinstance(value, bool) and expected is not bool:
            raise MalformedDocument(f"{key}: wrong type")
        if not isinstance(value, expected):
            raise MalformedDocument(f"{key}: wrong type")
    for key in ("run_time_file_config_number", "total_count", "current_count", "engine_number"):
        if doc[key] < 0:
            raise MalformedDocument(f"{key} must be non-negative")
    if doc["reset_time"] <= 0:
        raise MalformedDocument("reset_time must be positive")
    for key in ("study_code", "dynamic_vns", "last_recording_time"):
        value = doc.get(key)
        if value is not None and not isinstance(value, str):
            raise MalformedDocument(f"{key}: wrong type")
    last = doc.get("last_recording_time")
    if last is not None:
        try:
            parse_utc(last)
        except ValueError as exc:
            raise MalformedDocument(f"last_recording_time: {exc}") from exc
    for codes_key in ("generated_neighbor_codes", "entered_neighbor_codes"):
        codes = doc[codes_key]
        if any(not isinstance(c, str) for c in codes):
            raise MalformedDocument(f"{codes_key}: codes must be strings")
    if len(set(doc["generated_neighbor_codes"])) != len(doc["generated_neighbor_codes"]):
        raise MalformedDocument("generated_neighbor_codes contains duplicates")
    forbidden = FORBIDDEN_QUESTION_IDS & set(doc["personal_info"])
    if forbidden:
        raise MalformedDocument(f"forbidden personal_info keys: {sorted(forbidden)}")
    return doc


def status_from_doc(doc: dict) -> LocalConfigStatus:
    validate_status_doc(doc)
    last = doc.get("last_recording_time")
    return LocalConfigStatus(
        language=doc["language"],
        study_code=doc.get("study_code"),
        personal_info=dict(doc["personal_info"]),
        generated_neighbor_codes=tuple(doc["generated_neighbor_codes"]),
        entered_neighbor_codes=tuple(doc["entered_neighbor_codes"]),
        run_time_file_config_number=doc["run_time_file_config_number"],
        total_count=doc["total_count"],
        current_count=doc["current_count"],
        reset_time=doc["reset_time"],
        engine_number=doc["engine_number"],
        vns_number=doc["vns_number"],
        dynamic_vns_toggle=doc["dynamic_vns_toggle"],
        dynamic_vns=doc.get("dynamic_vns"),
        dirty=doc["dirty"],
        ui_color=doc["ui_color"],
        last_recording_time=parse_utc(last) if last else None,
    )
