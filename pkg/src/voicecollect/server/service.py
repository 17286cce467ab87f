"""Collection service: config registry, sample ingestion, engine dispatch.

The HTTP layer stays thin; everything stateful happens here so the same
service object can be driven by FastAPI routes and by tests directly.
"""

from __future__ import annotations

import json
import logging
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..core import (
    MalformedDocument,
    SampleUpload,
    bundled_default_config,
    parse_runtime_config,
    serialize_runtime_config,
    validate_status_doc,
)
from ..engine import EngineKind, EngineRegistry, EngineSpec, RemoteUnreachable, run_engine
from ..storage import DataStore, StorageFailure, StoredResponse

logger = logging.getLogger(__name__)


class ConfigNotFound(KeyError):
    pass


@dataclass(frozen=True)
class IngestReceipt:
    sample_id: str
    stored: bool
    duplicate: bool
    engine_dispatched: bool


class ConfigRegistry:
    """Numbered runtime-config documents, swappable live.

    The exact installed bytes are what gets served; a replacement is
    validated in full before the atomic swap, so readers only ever see
    complete versions. Installed documents are mirrored to disk so a
    restarted server serves the same bytes.
    """

    def __init__(self, configs_dir: Path):
        self._dir = configs_dir
        self._dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._docs: dict[int, bytes] = {}
        self._defaults: dict[int, int] = {}  # config_number -> default_engine_number
        for path in sorted(self._dir.glob("app_runtime_config_file_*.json")):
            try:
                number = int(path.stem.rsplit("_", 1)[1])
                self._install(number, path.read_bytes(), persist=False)
            except (ValueError, MalformedDocument):
                logger.warning("skipping unreadable installed config %s", path)

    def install(self, raw: bytes) -> int:
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedDocument(f"not a valid JSON document: {exc}") from exc
        number = doc.get("config_number") if isinstance(doc, dict) else None
        if not isinstance(number, int) or isinstance(number, bool) or number < 0:
            raise MalformedDocument("config_number must be a non-negative integer")
        self._install(number, raw, persist=True)
        return number

    def _install(self, number: int, raw: bytes, *, persist: bool) -> None:
        config = parse_runtime_config(raw, number)  # full validation before swap
        with self._lock:
            self._docs[number] = raw
            self._defaults[number] = config.default_engine_number
            if persist:
                path = self._dir / f"app_runtime_config_file_{number}.json"
                tmp = path.parent / f".{path.name}.tmp"
                tmp.write_bytes(raw)
                tmp.replace(path)

    def serve(self, number: int) -> bytes:
        with self._lock:
            try:
                return self._docs[number]
            except KeyError:
                raise ConfigNotFound(number) from None

    def default_engine_number(self, config_number: int) -> int:
        with self._lock:
            return self._defaults.get(config_number, 0)

    def numbers(self) -> list[int]:
        with self._lock:
            return sorted(self._docs)


class EngineDispatcher:
    """Runs engines asynchronously after ingest, FIFO per phone_hash."""

    def __init__(self, store: DataStore, max_workers: int = 16):
        self._store = store
        self._lock = threading.Lock()
        self._queues: dict[str, deque] = {}
        self._active: set[str] = set()
        self._executor = ThreadPoolExecutor(
            max_workers=max_workers, thread_name_prefix="engine"
        )

    def submit(
        self, spec: EngineSpec, sample: SampleUpload, audio: bytes | None, count: int
    ) -> None:
        with self._lock:
            queue = self._queues.setdefault(sample.phone_hash, deque())
            queue.append((spec, sample, audio, count))
            if sample.phone_hash not in self._active:
                self._active.add(sample.phone_hash)
                self._executor.submit(self._drain_phone, sample.phone_hash)

    def _drain_phone(self, phone_hash: str) -> None:
        while True:
            with self._lock:
                queue = self._queues[phone_hash]
                if not queue:
                    self._active.discard(phone_hash)
                    return
                spec, sample, audio, count = queue.popleft()
            try:
                response = run_engine(spec, sample, audio, count)
                if response is not None:
                    self._store.store_response(
                        phone_hash,
                        text=response.text,
                        audio=response.audio,
                        audio_media_type=response.audio_media_type,
                    )
            except RemoteUnreachable as exc:
                # Ingest was already acknowledged; the phone simply gets no answer.
                logger.warning("engine %s dispatch failed: %s", spec.number, exc)
            except Exception:
                logger.exception("engine %s dispatch crashed", spec.number)

    def pending(self) -> int:
        with self._lock:
            return sum(len(q) for q in self._queues.values()) + len(self._active)

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True, cancel_futures=False)


class CollectionService:
    def __init__(
        self,
        data_root: Path | str,
        *,
        default_config_number: int | None = None,
        registry: EngineRegistry | None = None,
    ):
        self.store = DataStore(data_root)
        self.configs = ConfigRegistry(Path(data_root) / "configs")
        self.engines = registry or EngineRegistry()
        self.dispatcher = EngineDispatcher(self.store)
        if default_config_number is not None and default_config_number not in self.configs.numbers():
            self.configs.install(
                serialize_runtime_config(bundled_default_config(default_config_number))
            )

    def serve_config(self, number: int) -> bytes:
        return self.configs.serve(number)

    def apply_admin_config(self, raw: bytes) -> int:
        return self.configs.install(raw)

    def ingest_sample(self, upload: SampleUpload, audio: bytes | None) -> IngestReceipt:
        """Store once per sample_id; duplicates acknowledge without effects."""
        if not self.store.claim_sample_id(upload.phone_hash, upload.sample_id):
            return IngestReceipt(
                sample_id=upload.sample_id, stored=False, duplicate=True, engine_dispatched=False
            )
        try:
            self.store.store_sample(upload, audio)
            self.store.persist_seen(upload.phone_hash, upload.sample_id)
        except StorageFailure:
            self.store.release_sample_id(upload.phone_hash, upload.sample_id)
            raise

        dispatched = False
        spec = self._resolve_engine(upload)
        if spec.kind is not EngineKind.NONE:
            count = self.store.phone_sample_count(upload.phone_hash)
            self.dispatcher.submit(spec, upload, audio, count)
            dispatched = True
        return IngestReceipt(
            sample_id=upload.sample_id, stored=True, duplicate=False, engine_dispatched=dispatched
        )

    def _resolve_engine(self, upload: SampleUpload) -> EngineSpec:
        # The phone's explicit engine choice wins; otherwise the config's default.
        number = upload.engine_number
        if number == 0:
            number = self.configs.default_engine_number(upload.config_number)
        return self.engines.get(number)

    def ingest_status(self, phone_hash: str, doc: dict) -> None:
        validate_status_doc(doc)
        self.store.store_status(phone_hash, doc)

    def get_response(self, phone_hash: str) -> StoredResponse | None:
        return self.store.load_response(phone_hash)

    def close(self) -> None:
        self.dispatcher.shutdown()
