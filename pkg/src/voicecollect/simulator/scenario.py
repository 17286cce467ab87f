"""Scenario runner: many simulated phones against a real server.

Each phone owns a private client directory and runs the genuine client
loop (identity, config fetch, prompt cycle, durable queue, flush). The
point is to exercise the eventual-delivery property, so connectivity is
scripted: a seeded schedule of on/off windows on a virtual timeline that
phones consult at every flush. Off means the flush is skipped at the
request boundary; on means a real HTTP exchange. A final drain phase
forces connectivity on until every queue is empty (capped), after which
the server's directory census is verified against what was produced.

The seed fully determines the schedule, every phone identity, every
sample_id, and all synthetic audio.
"""

from __future__ import annotations

import json
import logging
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import timedelta
from pathlib import Path

from ..client import CollectorClient, HttpTransport
from ..core import (
    StepKind,
    format_utc,
    new_session,
    next_prompt,
    parse_utc,
    register_recording,
    required_selection,
    select_list,
    start_over,
    utc_now,
)

logger = logging.getLogger(__name__)

DRAIN_CAP_SECONDS = 120.0
AUDIO_MIN_BYTES = 1024
AUDIO_MAX_BYTES = 30 * 1024
AUDIO_MEDIA_TYPE = "audio/wav"
_PHONE_SEED_STRIDE = 100003  # prime; keeps per-phone RNG streams disjoint


class SetupFailure(Exception):
    """The server was not reachable during scenario setup."""


@dataclass(frozen=True)
class ScenarioSpec:
    phones: int
    samples_per_phone: int
    uptime_fraction: float
    seed: int
    config_number: int
    engine_number: int = 0
    drain: bool = True


@dataclass
class ScenarioReport:
    delivered: int = 0
    duplicates_detected_on_server: int = 0
    queue_residue: int = 0
    per_phone_counts: dict[str, int] = field(default_factory=dict)
    wall_time: float = 0.0
    started_at: str = ""
    finished_at: str = ""


class ConnectivitySchedule:
    """Seeded alternating on/off windows over a virtual timeline.

    Each cycle has a random length; the first uptime_fraction of it is on.
    Past the generated horizon the last state repeats cycle by cycle, so
    is_up is total.
    """

    def __init__(self, seed: int, uptime_fraction: float, horizon: float):
        self.uptime_fraction = max(0.0, min(1.0, uptime_fraction))
        rng = random.Random(seed)
        self._windows: list[tuple[float, float, bool]] = []
        t = 0.0
        while t < horizon:
            period = rng.uniform(8.0, 16.0)
            on_until = t + period * self.uptime_fraction
            if on_until > t:
                self._windows.append((t, on_until, True))
            if t + period > on_until:
                self._windows.append((on_until, t + period, False))
            t += period
        self._horizon = t

    def is_up(self, t: float) -> bool:
        if self.uptime_fraction <= 0.0:
            return False
        if self.uptime_fraction >= 1.0:
            return True
        t = t % self._horizon if self._horizon > 0 else 0.0
        for start, end, up in self._windows:
            if start <= t < end:
                return up
        return True


@dataclass
class _PhoneOutcome:
    phone_hash: str
    produced: int
    residue: int
    duplicates: int


def run_scenario(spec: ScenarioSpec, server_url: str, work_dir: Path | str) -> ScenarioReport:
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    horizon = spec.samples_per_phone * 2.0 + 60.0
    schedule = ConnectivitySchedule(spec.seed, spec.uptime_fraction, horizon)
    started = utc_now()
    t0 = time.monotonic()

    outcomes: list[_PhoneOutcome] = []
    outcomes_lock = threading.Lock()

    def one_phone(index: int) -> None:
        outcome = _run_phone(index, spec, server_url, work_dir, schedule)
        with outcomes_lock:
            outcomes.append(outcome)

    workers = min(max(spec.phones, 1), 32)
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="phone") as pool:
        futures = [pool.submit(one_phone, i) for i in range(spec.phones)]
        for future in futures:
            future.result()

    report = ScenarioReport(
        delivered=sum(o.produced - o.residue for o in outcomes),
        duplicates_detected_on_server=sum(o.duplicates for o in outcomes),
        queue_residue=sum(o.residue for o in outcomes),
        per_phone_counts={o.phone_hash: o.produced for o in outcomes},
        wall_time=time.monotonic() - t0,
        started_at=format_utc(started),
        finished_at=format_utc(utc_now()),
    )
    return report


def _run_phone(
    index: int,
    spec: ScenarioSpec,
    server_url: str,
    work_dir: Path,
    schedule: ConnectivitySchedule,
) -> _PhoneOutcome:
    rng = random.Random(spec.seed * _PHONE_SEED_STRIDE + index)
    transport = HttpTransport(server_url)
    try:
        client = CollectorClient(work_dir / f"phone{index:04d}", transport, rng=rng)
        config, provenance = client.fetch_config_with_fallback(spec.config_number)
        if provenance != "network":
            raise SetupFailure(f"phone {index}: server unreachable during setup")
        client.set_status(
            replace(
                client.status,
                run_time_file_config_number=spec.config_number,
                engine_number=spec.engine_number,
                dirty=True,
            )
        )

        now = utc_now()
        session = new_session(client.phone_hash, config, now)
        need = required_selection(config)
        if need is not None:
            session = select_list(session, config, rng.randrange(need.list_count))

        produced = 0
        duplicates = 0
        virtual_t = 0.0
        terminals_in_a_row = 0
        while produced < spec.samples_per_phone:
            step = next_prompt(session, config)
            if step.kind is StepKind.TERMINAL:
                terminals_in_a_row += 1
                if terminals_in_a_row > 1:
                    raise SetupFailure("config yields no recordable steps")
                session = start_over(session, utc_now())
                continue
            terminals_in_a_row = 0
            upload, audio = _synthesize(client, rng, step, config, session, produced)
            client.enqueue_sample(upload, audio)
            session, status = register_recording(session, client.status, utc_now())
            client.set_status(status)
            produced += 1

            virtual_t += rng.uniform(0.5, 2.0)
            up = schedule.is_up(virtual_t)
            flush = client.flush_queue(connectivity=up)
            duplicates += flush.duplicates
            if up:
                client.upload_status_if_due()
                if produced % 10 == 0:
                    client.poll_response()

        if spec.drain:
            duplicates += _drain(client)
            client.upload_status_if_due()
        return _PhoneOutcome(
            phone_hash=client.phone_hash,
            produced=produced,
            residue=client.store.queue_length(),
            duplicates=duplicates,
        )
    finally:
        transport.close()


def _drain(client: CollectorClient) -> int:
    """Forced-connectivity flush until the queue empties or the cap hits."""
    deadline = time.monotonic() + DRAIN_CAP_SECONDS
    duplicates = 0
    while client.store.queue_length() > 0 and time.monotonic() < deadline:
        report = client.flush_queue(connectivity=True)
        duplicates += report.duplicates
        if report.remaining and (report.skipped_backoff or report.delivered == 0):
            time.sleep(0.05)
    return duplicates


def _synthesize(client, rng, step, config, session, sequence):
    """One synthetic submission for the current step."""
    if step.kind is StepKind.TEXT_ONLY:
        upload = client.new_sample(
            list_index=session.selected_list_index,
            prompt_index=session.cursor if session.selected_list_index is not None else None,
            prompt_text=step.text or None,
            text_input=f"text reply {sequence}",
        )
        return upload, None
    audio = rng.randbytes(rng.randint(AUDIO_MIN_BYTES, AUDIO_MAX_BYTES))
    if step.kind is StepKind.RECORD:
        upload = client.new_sample(
            list_index=session.selected_list_index,
            prompt_index=session.cursor,
            prompt_text=step.text,
            recorded_seconds=round(rng.uniform(0.5, step.seconds), 2),
            audio_media_type=AUDIO_MEDIA_TYPE,
        )
    else:  # free recording
        upload = client.new_sample(
            recorded_seconds=round(rng.uniform(0.5, config.max_recording_time), 2),
            audio_media_type=AUDIO_MEDIA_TYPE,
        )
    return upload, audio


# --- verification ----------------------------------------------------------------


def verify_report(
    report: ScenarioReport, spec: ScenarioSpec, data_root: Path | str
) -> list[str]:
    """End-state checks against the server's own directory tree.

    Returns violations as strings; empty means pass.
    """
    violations: list[str] = []
    expected = spec.phones * spec.samples_per_phone
    if report.queue_residue != 0:
        violations.append(f"queue residue: {report.queue_residue} samples undelivered")
    if report.delivered != expected:
        violations.append(f"delivered {report.delivered}, expected {expected}")

    samples_dir = Path(data_root) / "samples"
    seen_ids: set[str] = set()
    sidecars = 0
    per_phone: dict[str, int] = {}
    window = _run_window(report)
    for phone_dir in sorted(samples_dir.iterdir()) if samples_dir.is_dir() else []:
        if not phone_dir.is_dir():
            continue
        for meta_path in sorted(phone_dir.glob("*.meta.json")):
            sidecars += 1
            doc = json.loads(meta_path.read_text())
            if doc.get("phone_hash") != phone_dir.name:
                violations.append(
                    f"isolation breach: {meta_path.name} under {phone_dir.name} "
                    f"claims phone_hash {doc.get('phone_hash')}"
                )
            sid = doc.get("sample_id")
            if sid in seen_ids:
                violations.append(f"duplicate sample_id stored: {sid}")
            seen_ids.add(sid)
            per_phone[phone_dir.name] = per_phone.get(phone_dir.name, 0) + 1
            try:
                ts = parse_utc(doc.get("timestamp", ""))
            except ValueError:
                violations.append(f"unparseable timestamp in {meta_path.name}")
            else:
                if window and not (window[0] <= ts <= window[1]):
                    violations.append(
                        f"timestamp outside run window: {meta_path.name}"
                    )

    if sidecars != expected:
        violations.append(f"server census: {sidecars} samples stored, expected {expected}")
    if len(seen_ids) != expected:
        violations.append(
            f"server census: {len(seen_ids)} distinct sample_ids, expected {expected}"
        )
    for phone_hash, count in report.per_phone_counts.items():
        stored = per_phone.get(phone_hash, 0)
        if stored != count:
            violations.append(
                f"phone {phone_hash}: stored {stored}, produced {count}"
            )
    return violations


def _run_window(report: ScenarioReport):
    if not report.started_at or not report.finished_at:
        return None
    slack = timedelta(seconds=60)
    return (
        parse_utc(report.started_at) - slack,
        parse_utc(report.finished_at) + slack,
    )


def report_to_doc(report: ScenarioReport, spec: ScenarioSpec, violations: list[str]) -> dict:
    return {
        "phones": spec.phones,
        "samples_per_phone": spec.samples_per_phone,
        "uptime_fraction": spec.uptime_fraction,
        "seed": spec.seed,
        "config_number": spec.config_number,
        "engine_number": spec.engine_number,
        "delivered": report.delivered,
        "duplicates_detected_on_server": report.duplicates_detected_on_server,
        "queue_residue": report.queue_residue,
        "per_phone_counts": dict(sorted(report.per_phone_counts.items())),
        "wall_time_seconds": round(report.wall_time, 3),
        "started_at": report.started_at,
        "finished_at": report.finished_at,
        "verify_passed": not violations,
        "violations": violations,
    }
