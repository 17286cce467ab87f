"""On-device persistence: identity, settings/status, and the upload queue.

Layout under one client root:

    identity            the phone_hash, 32 hex chars plus newline
    status.json         serialized LocalConfigStatus
    cached_config.json  last config fetched from the network
    queue/journal.jsonl append-only upload queue journal

The queue journal holds one JSON record per line, each carrying a sha256
checksum of its own payload. Records are either {"op": "add", ...} with a
full sample entry or {"op": "ack", "sample_id": ...} marking delivery.
Replaying adds minus acks rebuilds the pending queue in FIFO order. A
line that fails JSON parsing or its checksum marks a crash mid-append:
that line and everything after it are dropped (with a warning) and the
journal is truncated back to the last good record.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import random
from dataclasses import dataclass
from pathlib import Path

from ..core import (
    LocalConfigStatus,
    SampleUpload,
    new_phone_hash,
    sample_from_doc,
    sample_to_doc,
    status_from_doc,
    status_to_doc,
)

logger = logging.getLogger(__name__)

COMPACT_ACK_THRESHOLD = 256


class PersistenceFailure(Exception):
    pass


@dataclass(frozen=True)
class QueuedSample:
    upload: SampleUpload
    audio: bytes | None


def _checksum(record: dict) -> str:
    payload = json.dumps(record, ensure_ascii=False, sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def _seal(record: dict) -> str:
    record = dict(record)
    record["sum"] = _checksum(record)
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def _unseal(line: str) -> dict | None:
    try:
        record = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(record, dict):
        return None
    claimed = record.pop("sum", None)
    if claimed != _checksum(record):
        return None
    return record


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.parent / f".{path.name}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class ClientStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.queue_dir = self.root / "queue"
        self.queue_dir.mkdir(parents=True, exist_ok=True)
        self.identity_path = self.root / "identity"
        self.status_path = self.root / "status.json"
        self.cached_config_path = self.root / "cached_config.json"
        self.journal_path = self.queue_dir / "journal.jsonl"
        self._pending: list[QueuedSample] = []
        self._pending_ids: set[str] = set()
        self._acked_in_journal = 0
        self._replay_journal()

    # --- identity -------------------------------------------------------------

    def ensure_phone_hash(self, rng: random.Random | None = None) -> str:
        """The stable hidden device id; created once, constant forever."""
        if self.identity_path.exists():
            value = self.identity_path.read_text().strip()
            if value:
                return value
        value = new_phone_hash(rng)
        try:
            _atomic_write(self.identity_path, (value + "\n").encode())
        except OSError as exc:
            raise PersistenceFailure(str(exc)) from exc
        return value

    # --- status ---------------------------------------------------------------

    def load_status(self) -> LocalConfigStatus:
        if not self.status_path.exists():
            return LocalConfigStatus()
        return status_from_doc(json.loads(self.status_path.read_text()))

    def save_status(self, status: LocalConfigStatus) -> None:
        doc = status_to_doc(status)
        data = (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode()
        try:
            _atomic_write(self.status_path, data)
        except OSError as exc:
            raise PersistenceFailure(str(exc)) from exc

    # --- cached config ----------------------------------------------------------

    def load_cached_config(self) -> bytes | None:
        if not self.cached_config_path.exists():
            return None
        return self.cached_config_path.read_bytes()

    def save_cached_config(self, raw: bytes) -> None:
        try:
            _atomic_write(self.cached_config_path, raw)
        except OSError as exc:
            raise PersistenceFailure(str(exc)) from exc

    # --- queue ------------------------------------------------------------------

    def _replay_journal(self) -> None:
        self._pending = []
        self._pending_ids = set()
        self._acked_in_journal = 0
        if not self.journal_path.exists():
            return
        raw = self.journal_path.read_bytes()
        good_bytes = 0
        entries: list[QueuedSample] = []
        by_id: dict[str, QueuedSample] = {}
        offset = 0
        for line in raw.splitlines(keepends=True):
            record = _unseal(line.decode("utf-8", "replace").rstrip("\n")) if line.endswith(
                b"\n"
            ) else None
            if record is None:
                logger.warning(
                    "upload queue journal corrupt at byte %d; dropping the tail", offset
                )
                break
            offset += len(line)
            good_bytes = offset
            if record.get("op") == "add":
                doc = record["entry"]["doc"]
                audio_b64 = record["entry"].get("audio_b64")
                audio = base64.b64decode(audio_b64) if audio_b64 else None
                upload = sample_from_doc(doc, has_audio=audio is not None)
                item = QueuedSample(upload=upload, audio=audio)
                entries.append(item)
                by_id[upload.sample_id] = item
            elif record.get("op") == "ack":
                by_id.pop(record.get("sample_id"), None)
                self._acked_in_journal += 1
        if good_bytes < len(raw):
            with open(self.journal_path, "r+b") as fh:
                fh.truncate(good_bytes)
        self._pending = [e for e in entries if e.upload.sample_id in by_id]
        self._pending_ids = set(by_id)

    def _append(self, record: dict) -> None:
        line = _seal(record) + "\n"
        try:
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise PersistenceFailure(str(exc)) from exc

    def enqueue(self, upload: SampleUpload, audio: bytes | None) -> None:
        """Durably append one sample; rejects a sample_id already queued."""
        if upload.sample_id in self._pending_ids:
            raise PersistenceFailure(f"sample_id already queued: {upload.sample_id}")
        entry = {"doc": sample_to_doc(upload)}
        if audio is not None:
            entry["audio_b64"] = base64.b64encode(audio).decode("ascii")
        self._append({"op": "add", "entry": entry})
        self._pending.append(QueuedSample(upload=upload, audio=audio))
        self._pending_ids.add(upload.sample_id)

    def ack(self, sample_id: str) -> None:
        """Durably mark the sample delivered and drop it from the queue."""
        self._append({"op": "ack", "sample_id": sample_id})
        self._acked_in_journal += 1
        self._pending = [e for e in self._pending if e.upload.sample_id != sample_id]
        self._pending_ids.discard(sample_id)
        if self._acked_in_journal >= COMPACT_ACK_THRESHOLD:
            self._compact()

    def pending(self) -> list[QueuedSample]:
        return list(self._pending)

    def queue_length(self) -> int:
        return len(self._pending)

    def _compact(self) -> None:
        """Rewrite the journal with only still-pending entries."""
        lines = []
        for item in self._pending:
            entry = {"doc": sample_to_doc(item.upload)}
            if item.audio is not None:
                entry["audio_b64"] = base64.b64encode(item.audio).decode("ascii")
            lines.append(_seal({"op": "add", "entry": entry}) + "\n")
        _atomic_write(self.journal_path, "".join(lines).encode("utf-8"))
        self._acked_in_journal = 0
