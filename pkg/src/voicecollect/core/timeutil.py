"""UTC timestamp helpers shared by every layer.

All wire timestamps are ISO-8601 UTC with a trailing ``Z``. Python 3.10's
``fromisoformat`` does not accept ``Z``, hence the parse shim.
"""

from __future__ import annotations

from datetime import datetime, timezone


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def format_utc(dt: datetime) -> str:
    """Render as ISO-8601 UTC, ``+00:00`` normalized to ``Z``."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_utc(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def filename_timestamp(value: str) -> str:
    """Filesystem-safe variant of a wire timestamp.

    Rule (bit-exact): normalize to UTC via parse_utc, render via
    format_utc, then replace every ``:`` with ``-``.
    """
    return format_utc(parse_utc(value)).replace(":", "-")
