"""The phone-side collection loop, headless.

CollectorClient owns a ClientStore and a Transport. Recording UIs and the
simulator drive it the same way: ensure identity, fetch config, enqueue
samples as they are produced, flush whenever there might be connectivity,
upload status when due, poll for an engine response.

The flusher never raises on network trouble; it reports. After a failed
flush it backs off exponentially (base 1 s, doubling, capped at 60 s,
jittered) and skips attempts until the backoff window has passed, so a
tight caller loop stays polite to a struggling server.
"""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Callable

from ..core import (
    LocalConfigStatus,
    RuntimeConfig,
    SampleUpload,
    bundled_default_config,
    format_utc,
    new_sample_id,
    parse_runtime_config,
    sample_to_doc,
    should_upload_status,
    status_to_doc,
    utc_now,
)
from .store import ClientStore, PersistenceFailure
from .transport import HttpTransport, Transport, TransportError

logger = logging.getLogger(__name__)

BACKOFF_BASE_SECONDS = 1.0
BACKOFF_CAP_SECONDS = 60.0


@dataclass(frozen=True)
class FlushReport:
    attempted: int = 0
    delivered: int = 0
    duplicates: int = 0
    remaining: int = 0
    skipped_backoff: bool = False


@dataclass
class _Backoff:
    failures: int = 0
    next_attempt_at: float = 0.0

    def ready(self, now: float) -> bool:
        return now >= self.next_attempt_at

    def record_failure(self, now: float, rng: random.Random) -> None:
        self.failures += 1
        delay = min(BACKOFF_BASE_SECONDS * (2 ** (self.failures - 1)), BACKOFF_CAP_SECONDS)
        self.next_attempt_at = now + delay * rng.uniform(0.5, 1.5)

    def record_success(self) -> None:
        self.failures = 0
        self.next_attempt_at = 0.0


class CollectorClient:
    def __init__(
        self,
        root: Path | str,
        transport: Transport,
        *,
        rng: random.Random | None = None,
        jitter_rng: random.Random | None = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.store = ClientStore(root)
        self.transport = transport
        self.rng = rng or random.Random()
        # Backoff jitter draws from its own stream so transport failures
        # never shift the deterministic id sequence.
        self._jitter_rng = jitter_rng or random.Random()
        self.clock = clock
        self.phone_hash = self.store.ensure_phone_hash(rng)
        self.status: LocalConfigStatus = self.store.load_status()
        self._backoff = _Backoff()

    @classmethod
    def connect(cls, root: Path | str, server_url: str, **kwargs) -> CollectorClient:
        return cls(root, HttpTransport(server_url), **kwargs)

    # --- config -----------------------------------------------------------------

    def fetch_config_with_fallback(
        self, number: int, timeout: float = 5.0
    ) -> tuple[RuntimeConfig, str]:
        """Network first, then the cached copy, then the bundled default.

        Never fails: with no server and no cache the phone still records
        freely against the bundled FreeRecording config.
        """
        try:
            raw = self.transport.fetch_config(number, timeout)
            config = parse_runtime_config(raw, number)
        except Exception as exc:
            logger.info("config fetch failed (%s); falling back", exc)
        else:
            self.store.save_cached_config(raw)
            return config, "network"
        cached = self.store.load_cached_config()
        if cached is not None:
            try:
                doc = json.loads(cached.decode("utf-8"))
                cached_number = doc.get("config_number") if isinstance(doc, dict) else number
                return parse_runtime_config(cached, cached_number), "cache"
            except Exception:
                logger.warning("cached config unreadable; using bundled default")
        return bundled_default_config(number), "bundled"

    # --- samples ------------------------------------------------------------------

    def new_sample(self, **fields) -> SampleUpload:
        """A SampleUpload skeleton carrying this phone's identity and clock."""
        defaults = dict(
            sample_id=new_sample_id(self.rng),
            phone_hash=self.phone_hash,
            timestamp=format_utc(utc_now()),
            config_number=self.status.run_time_file_config_number,
            language=self.status.language,
            engine_number=self.status.engine_number,
        )
        defaults.update(fields)
        return SampleUpload(**defaults)

    def enqueue_sample(self, upload: SampleUpload, audio: bytes | None) -> None:
        """Durable local append; works with the network fully down."""
        if upload.phone_hash != self.phone_hash:
            raise PersistenceFailure("sample carries a foreign phone_hash")
        if audio is None and not (upload.text_input or "").strip():
            raise PersistenceFailure("sample needs audio or non-empty text_input")
        self.store.enqueue(upload, audio)

    def flush_queue(self, connectivity: bool = True) -> FlushReport:
        """Send queued samples in order; stop at the first failure.

        A sample is removed only after the server acknowledges it, so a
        dropped acknowledgment re-sends and the server's dedup absorbs it.
        """
        if not connectivity:
            return FlushReport(remaining=self.store.queue_length())
        now = self.clock()
        if not self._backoff.ready(now):
            return FlushReport(remaining=self.store.queue_length(), skipped_backoff=True)
        attempted = delivered = duplicates = 0
        for item in self.store.pending():
            attempted += 1
            doc = sample_to_doc(item.upload)
            try:
                receipt = self.transport.upload_sample(
                    doc, item.audio, item.upload.audio_media_type
                )
            except TransportError as exc:
                logger.info("flush stopped at %s: %s", item.upload.sample_id, exc)
                self._backoff.record_failure(self.clock(), self._jitter_rng)
                break
            self._backoff.record_success()
            self.store.ack(item.upload.sample_id)
            delivered += 1
            if receipt.get("duplicate"):
                duplicates += 1
        return FlushReport(
            attempted=attempted,
            delivered=delivered,
            duplicates=duplicates,
            remaining=self.store.queue_length(),
        )

    # --- status --------------------------------------------------------------------

    def update_status(self, **changes) -> None:
        """Apply user-driven settings changes; marks the document dirty."""
        self.status = replace(self.status, dirty=True, **changes)
        self.store.save_status(self.status)

    def set_status(self, status: LocalConfigStatus) -> None:
        self.status = status
        self.store.save_status(status)

    def upload_status_if_due(self, now: datetime | None = None) -> bool:
        now = now or utc_now()
        if not should_upload_status(self.status, now):
            return False
        try:
            self.transport.upload_status(self.phone_hash, status_to_doc(self.status))
        except TransportError as exc:
            logger.info("status upload failed, still due: %s", exc)
            return False
        if self.status.dirty:
            self.status = replace(self.status, dirty=False)
            self.store.save_status(self.status)
        return True

    # --- responses -------------------------------------------------------------------

    def poll_response(self) -> dict | None:
        """The per-phone engine answer, or None meaning keep recording."""
        try:
            return self.transport.fetch_response(self.phone_hash)
        except TransportError:
            return None
