"""Filesystem-backed durable store for samples, statuses, and responses.

Layout under one data root:

    samples/<phone_hash>/<timestamp>_<sample_id>.<ext>        audio bytes
    samples/<phone_hash>/<timestamp>_<sample_id>.meta.json    metadata sidecar
    status/<phone_hash>.json                                  latest status doc
    responses/<phone_hash>/response.txt | response.<ext>      engine output
    exports/<YYYY-MM-DD>.zip                                  daily bundles
    index/seen_ids/<phone_hash>                               dedup journal

<timestamp> is the sample's wire timestamp made filesystem-safe (colons
replaced by hyphens, see core.timeutil.filename_timestamp).

Commit protocol: every file lands via write-to-temp + rename. For a sample
pair the audio is renamed first and the sidecar second, so a pair is
visible if and only if its sidecar exists; audio files without a sidecar
are half-written leftovers and are swept on startup and before reuse of
the directory. Writes for one phone_hash are serialized by a per-hash lock.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import zipfile
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path

from ..core import (
    SampleUpload,
    filename_timestamp,
    format_utc,
    parse_utc,
    sample_from_doc,
    sample_to_doc,
    utc_now,
)

logger = logging.getLogger(__name__)

_EXT_BY_MEDIA_TYPE = {
    "audio/wav": "wav",
    "audio/x-wav": "wav",
    "audio/webm": "webm",
    "video/webm": "webm",
    "audio/ogg": "ogg",
    "audio/mpeg": "mp3",
    "audio/mp4": "m4a",
    "audio/flac": "flac",
    "application/octet-stream": "bin",
}
_MEDIA_TYPE_BY_EXT = {
    "wav": "audio/wav",
    "webm": "audio/webm",
    "ogg": "audio/ogg",
    "mp3": "audio/mpeg",
    "m4a": "audio/mp4",
    "flac": "audio/flac",
    "bin": "application/octet-stream",
}

META_SUFFIX = ".meta.json"


class StorageFailure(Exception):
    """A write could not be completed; no partial pair remains visible."""


@dataclass(frozen=True)
class StoredSample:
    sample_id: str
    phone_hash: str
    audio_path: Path | None
    meta_path: Path
    upload: SampleUpload


@dataclass(frozen=True)
class StoredResponse:
    text: str | None
    audio_path: Path | None
    audio_media_type: str | None
    produced_at: str


@dataclass(frozen=True)
class ExportBundle:
    day: date
    archive_path: Path
    sample_count: int
    audio_count: int
    sample_ids: tuple[str, ...]


def audio_extension(media_type: str | None) -> str:
    if media_type is None:
        return "bin"
    return _EXT_BY_MEDIA_TYPE.get(media_type.split(";")[0].strip().lower(), "bin")


def media_type_for_extension(ext: str) -> str:
    return _MEDIA_TYPE_BY_EXT.get(ext.lower().lstrip("."), "application/octet-stream")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.parent / f".{path.name}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class DataStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.samples_dir = self.root / "samples"
        self.status_dir = self.root / "status"
        self.responses_dir = self.root / "responses"
        self.exports_dir = self.root / "exports"
        self.seen_ids_dir = self.root / "index" / "seen_ids"
        for d in (
            self.samples_dir,
            self.status_dir,
            self.responses_dir,
            self.exports_dir,
            self.seen_ids_dir,
        ):
            d.mkdir(parents=True, exist_ok=True)

        self._locks_guard = threading.Lock()
        self._phone_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._seen_guard = threading.Lock()
        self._seen_by_phone: dict[str, set[str]] = {}
        self._seen_all: set[str] = set()
        self._load_seen_index()
        self._sweep_all()

    def _phone_lock(self, phone_hash: str) -> threading.Lock:
        with self._locks_guard:
            return self._phone_locks[phone_hash]

    # --- dedup index --------------------------------------------------------

    def _load_seen_index(self) -> None:
        for path in self.seen_ids_dir.iterdir():
            ids = {line for line in path.read_text().splitlines() if line}
            self._seen_by_phone[path.name] = ids
            self._seen_all.update(ids)

    def is_duplicate(self, sample_id: str) -> bool:
        with self._seen_guard:
            return sample_id in self._seen_all

    def claim_sample_id(self, phone_hash: str, sample_id: str) -> bool:
        """Atomically reserve a sample_id; False means it is a duplicate."""
        with self._seen_guard:
            if sample_id in self._seen_all:
                return False
            self._seen_all.add(sample_id)
            self._seen_by_phone.setdefault(phone_hash, set()).add(sample_id)
            return True

    def release_sample_id(self, phone_hash: str, sample_id: str) -> None:
        """Undo a claim after a failed store so a retry can land."""
        with self._seen_guard:
            self._seen_all.discard(sample_id)
            self._seen_by_phone.get(phone_hash, set()).discard(sample_id)

    def persist_seen(self, phone_hash: str, sample_id: str) -> None:
        path = self.seen_ids_dir / phone_hash
        with open(path, "a") as fh:
            fh.write(sample_id + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def phone_sample_count(self, phone_hash: str) -> int:
        with self._seen_guard:
            return len(self._seen_by_phone.get(phone_hash, ()))

    # --- samples ------------------------------------------------------------

    def store_sample(self, upload: SampleUpload, audio: bytes | None) -> StoredSample:
        """Persist an audio+sidecar pair (or sidecar alone for text-only).

        Idempotent on retry: the target filenames are derived from the
        sample's own id and timestamp, so a re-send lands on the same pair.
        """
        if audio is None and not (upload.text_input or "").strip():
            raise StorageFailure("sample carries neither audio nor text")
        phone_dir = self.samples_dir / upload.phone_hash
        stem = f"{filename_timestamp(upload.timestamp)}_{upload.sample_id}"
        with self._phone_lock(upload.phone_hash):
            try:
                phone_dir.mkdir(parents=True, exist_ok=True)
                self._sweep_dir(phone_dir)
                audio_path = None
                if audio is not None:
                    ext = audio_extension(upload.audio_media_type)
                    audio_path = phone_dir / f"{stem}.{ext}"
                    _atomic_write(audio_path, audio)
                meta_path = phone_dir / f"{stem}{META_SUFFIX}"
                meta_bytes = (
                    json.dumps(sample_to_doc(upload), ensure_ascii=False, indent=2) + "\n"
                ).encode()
                _atomic_write(meta_path, meta_bytes)
            except OSError as exc:
                raise StorageFailure(str(exc)) from exc
        return StoredSample(
            sample_id=upload.sample_id,
            phone_hash=upload.phone_hash,
            audio_path=audio_path,
            meta_path=meta_path,
            upload=upload,
        )

    def _sweep_dir(self, phone_dir: Path) -> None:
        """Drop temp files and audio left behind without a committed sidecar."""
        if not phone_dir.is_dir():
            return
        for path in phone_dir.iterdir():
            if path.name.endswith(".tmp"):
                path.unlink(missing_ok=True)
                continue
            if path.name.endswith(META_SUFFIX):
                continue
            sidecar = phone_dir / f"{_stem_of(path)}{META_SUFFIX}"
            if not sidecar.exists():
                logger.warning("removing half-written sample artifact %s", path)
                path.unlink(missing_ok=True)

    def _sweep_all(self) -> None:
        for phone_dir in self.samples_dir.iterdir():
            if phone_dir.is_dir():
                with self._phone_lock(phone_dir.name):
                    self._sweep_dir(phone_dir)

    def iter_samples(self, phone_hash: str | None = None):
        """Yield StoredSample for every committed pair (sidecar present)."""
        if phone_hash is not None:
            dirs = [self.samples_dir / phone_hash]
        else:
            dirs = sorted(d for d in self.samples_dir.iterdir() if d.is_dir())
        for phone_dir in dirs:
            if not phone_dir.is_dir():
                continue
            for meta_path in sorted(phone_dir.glob(f"*{META_SUFFIX}")):
                yield self._load_pair(phone_dir, meta_path)

    def _load_pair(self, phone_dir: Path, meta_path: Path) -> StoredSample:
        doc = json.loads(meta_path.read_text())
        upload = sample_from_doc(doc, has_audio=not doc.get("text_only", False))
        audio_path = None
        if not upload.text_only:
            stem = meta_path.name[: -len(META_SUFFIX)]
            ext = audio_extension(upload.audio_media_type)
            candidate = phone_dir / f"{stem}.{ext}"
            if candidate.exists():
                audio_path = candidate
        return StoredSample(
            sample_id=upload.sample_id,
            phone_hash=phone_dir.name,
            audio_path=audio_path,
            meta_path=meta_path,
            upload=upload,
        )

    # --- status documents -----------------------------------------------------

    def store_status(self, phone_hash: str, doc: dict) -> None:
        envelope = {"received_at": format_utc(utc_now()), "status": doc}
        data = (json.dumps(envelope, ensure_ascii=False, indent=2) + "\n").encode()
        with self._phone_lock(phone_hash):
            try:
                _atomic_write(self.status_dir / f"{phone_hash}.json", data)
            except OSError as exc:
                raise StorageFailure(str(exc)) from exc

    def load_status(self, phone_hash: str) -> dict | None:
        path = self.status_dir / f"{phone_hash}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def list_status_hashes(self) -> list[str]:
        return sorted(p.stem for p in self.status_dir.glob("*.json"))

    # --- engine responses -------------------------------------------------------

    def store_response(
        self,
        phone_hash: str,
        *,
        text: str | None = None,
        audio: bytes | None = None,
        audio_media_type: str | None = None,
    ) -> list[Path]:
        """Replace the per-phone response atomically; returns written paths."""
        if text is None and audio is None:
            raise StorageFailure("a response needs text and/or audio")
        phone_dir = self.responses_dir / phone_hash
        written: list[Path] = []
        with self._phone_lock(phone_hash):
            try:
                phone_dir.mkdir(parents=True, exist_ok=True)
                # Clear the previous response so text/audio never mix eras.
                for old in phone_dir.iterdir():
                    if not old.name.endswith(".tmp"):
                        old.unlink(missing_ok=True)
                if audio is not None:
                    ext = audio_extension(audio_media_type)
                    path = phone_dir / f"response.{ext}"
                    _atomic_write(path, audio)
                    written.append(path)
                if text is not None:
                    path = phone_dir / "response.txt"
                    _atomic_write(path, text.encode("utf-8"))
                    written.append(path)
            except OSError as exc:
                raise StorageFailure(str(exc)) from exc
        return written

    def load_response(self, phone_hash: str) -> StoredResponse | None:
        phone_dir = self.responses_dir / phone_hash
        if not phone_dir.is_dir():
            return None
        text = None
        audio_path = None
        newest = 0.0
        for path in sorted(phone_dir.iterdir()):
            if path.name.endswith(".tmp"):
                continue
            if path.name == "response.txt":
                text = path.read_text(encoding="utf-8")
            elif path.name.startswith("response."):
                audio_path = path
            newest = max(newest, path.stat().st_mtime)
        produced_at = format_utc(datetime.fromtimestamp(newest, tz=timezone.utc)) if newest else ""
        if text is None and audio_path is None:
            return None
        media = media_type_for_extension(audio_path.suffix) if audio_path else None
        return StoredResponse(
            text=text, audio_path=audio_path, audio_media_type=media, produced_at=produced_at
        )

    # --- daily export -------------------------------------------------------------

    def build_daily_export(self, day: date) -> ExportBundle:
        """Bundle every sample whose timestamp falls on the given UTC day.

        The zip holds the audio files under samples/<hash>/... plus
        manifest.jsonl with one row per sample: the sidecar metadata with
        an extra "audio_path" key naming the archive member (null for
        text-only samples).
        """
        rows = []
        members: list[tuple[Path, str]] = []
        for stored in self.iter_samples():
            ts = parse_utc(stored.upload.timestamp)
            if ts.date() != day:
                continue
            member = None
            if stored.audio_path is not None:
                member = f"samples/{stored.phone_hash}/{stored.audio_path.name}"
                members.append((stored.audio_path, member))
            rows.append({**sample_to_doc(stored.upload), "audio_path": member})

        archive_path = self.exports_dir / f"{day.isoformat()}.zip"
        tmp = archive_path.parent / f".{archive_path.name}.tmp"
        with zipfile.ZipFile(tmp, "w", zipfile.ZIP_DEFLATED) as zf:
            for src, member in members:
                zf.write(src, member)
            manifest = "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)
            zf.writestr("manifest.jsonl", manifest)
        os.replace(tmp, archive_path)
        return ExportBundle(
            day=day,
            archive_path=archive_path,
            sample_count=len(rows),
            audio_count=len(members),
            sample_ids=tuple(row["sample_id"] for row in rows),
        )


def _stem_of(path: Path) -> str:
    name = path.name
    return name[: name.rfind(".")] if "." in name else name
