"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line straight to the terminal
(bypassing capture) so a full run reads as a checklist. Everything here
exercises only the server, client SDK, and simulator — no UI involved.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
import zipfile
from contextlib import contextmanager
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import httpx
import pytest

from voicecollect.client import CollectorClient, HttpTransport, TransportError
from voicecollect.core import (
    AGE_CAP,
    AGE_CAP_TOKEN,
    FORBIDDEN_QUESTION_IDS,
    ForbiddenField,
    LocalConfigStatus,
    Mode,
    PromptList,
    PromptPair,
    RuntimeConfig,
    TypeMismatch,
    UnknownQuestion,
    default_question_schema,
    format_utc,
    new_phone_hash,
    new_sample_id,
    new_session,
    next_prompt,
    parse_runtime_config,
    register_recording,
    reset_counts,
    sample_from_doc,
    schema_from_doc,
    schema_to_doc,
    serialize_runtime_config,
    should_upload_status,
    validate_personal_info,
)
from voicecollect.simulator import ScenarioSpec, run_scenario, verify_report

from conftest import guided_config
from test_config import INVALID_EXPECTATIONS, VALID_EXPECTATIONS, VECTOR_DIR


@contextmanager
def criterion(capsys, name):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"FAIL  {name}")
        raise
    with capsys.disabled():
        print(f"PASS  {name}  ({time.perf_counter() - start:.2f}s)")


def test_config_grammar_conformance(capsys):
    with criterion(capsys, "config-grammar conformance (golden vectors)"):
        start = time.perf_counter()
        names = list(VALID_EXPECTATIONS) + list(INVALID_EXPECTATIONS)
        assert len(names) >= 12
        for name, (mode, lengths, _) in VALID_EXPECTATIONS.items():
            number = int(name.rsplit("_", 1)[1].split(".")[0])
            raw = (VECTOR_DIR / "valid" / name).read_bytes()
            config = parse_runtime_config(raw, number)
            assert config.mode is mode
            assert [len(pl) for pl in config.lists] == lengths
            assert serialize_runtime_config(config) == raw  # byte-identical
        for name, error in INVALID_EXPECTATIONS.items():
            raw = (VECTOR_DIR / "invalid" / name).read_bytes()
            with pytest.raises(error):
                parse_runtime_config(raw, 99)
        assert time.perf_counter() - start < 1.0


def test_round_robin_property(capsys):
    with criterion(capsys, "round-robin prompt cycling (L in 1..8, 100 steps)"):
        start = time.perf_counter()
        now = datetime(2024, 1, 1, tzinfo=timezone.utc)
        for length in range(1, 9):
            config = RuntimeConfig(
                config_number=1,
                lists=(
                    PromptList(
                        prompts=tuple(PromptPair(f"p{i}", 5) for i in range(length))
                    ),
                ),
                mode=Mode.GUIDED,
            )
            session = new_session("0" * 32, config, now)
            status = LocalConfigStatus()
            for k in range(100):
                step = next_prompt(session, config)
                assert step.text == f"p{k % length}"
                session, status = register_recording(session, status, now)
        assert time.perf_counter() - start < 1.0


def test_counter_conservation(capsys):
    with criterion(capsys, "counter conservation over 10^4 randomized steps"):
        rng = random.Random(202)
        now = datetime(2024, 1, 1, tzinfo=timezone.utc)
        config = RuntimeConfig(
            config_number=1,
            lists=(PromptList(prompts=(PromptPair("p", 5),)),),
            mode=Mode.GUIDED,
        )
        session = new_session("0" * 32, config, now)
        status = LocalConfigStatus()
        recordings = 0
        since_reset = 0
        for _ in range(10_000):
            if rng.random() < 0.9:
                session, status = register_recording(session, status, now)
                recordings += 1
                since_reset += 1
            else:
                status = reset_counts(status)
                since_reset = 0
            assert status.total_count + status.current_count == recordings
            assert status.current_count == since_reset


def test_upload_trigger_truth_table(capsys):
    with criterion(capsys, "status upload trigger truth table (8 combinations)"):
        now = datetime(2024, 1, 1, 12, 0, tzinfo=timezone.utc)
        reset_time = 30
        for dirty in (False, True):
            for last_set in (False, True):
                for elapsed_over in (False, True):
                    if last_set:
                        minutes = 31 if elapsed_over else 29
                        last = now - timedelta(minutes=minutes)
                    else:
                        last = None  # elapsed time is undefined without a recording
                    status = LocalConfigStatus(
                        dirty=dirty, reset_time=reset_time, last_recording_time=last
                    )
                    expected = dirty or (last_set and elapsed_over)
                    assert should_upload_status(status, now) is expected, (
                        dirty,
                        last_set,
                        elapsed_over,
                    )


def test_pii_guard(capsys):
    with criterion(capsys, "personal-information guard (age cap, forbidden keys)"):
        schema = default_question_schema()
        assert [q.id for q in schema.questions] == [
            "country",
            "zip",
            "age",
            "diagnosed_covid",
            "diagnosed_when",
            "fever",
            "fever_how_much",
            "cough_today",
            "cough_how_much",
            "other_symptoms",
        ]
        assert schema_from_doc(schema_to_doc(schema)) == schema  # round-trip

        rng = random.Random(77)
        ids = [q.id for q in schema.questions]
        pool = ids + sorted(FORBIDDEN_QUESTION_IDS) + ["bogus"]
        for _ in range(2_000):
            answers = {}
            for key in rng.sample(pool, rng.randint(1, 5)):
                answers[key] = rng.choice(
                    ["yes", "no", "free text", str(rng.randint(0, 150)), rng.randint(0, 150)]
                )
            try:
                out = validate_personal_info(answers, schema)
            except (ForbiddenField, UnknownQuestion, TypeMismatch):
                continue
            assert not FORBIDDEN_QUESTION_IDS & set(out)
            age = out.get("age")
            if age is not None:
                assert age == AGE_CAP_TOKEN or (isinstance(age, int) and age < AGE_CAP)


def test_end_to_end_eventual_delivery(capsys, live_server, tmp_path):
    with criterion(
        capsys, "end-to-end eventual delivery (20 phones x 50, uptime 0.3, seed 42)"
    ):
        spec = ScenarioSpec(
            phones=20,
            samples_per_phone=50,
            uptime_fraction=0.3,
            seed=42,
            config_number=3,
        )
        start = time.perf_counter()
        report = run_scenario(spec, live_server.url, tmp_path / "phones")
        wall = time.perf_counter() - start
        assert wall < 120.0
        assert report.delivered == 1000
        assert report.queue_residue == 0
        violations = verify_report(report, spec, live_server.data_root)
        assert violations == []
        stored_ids = set()
        for phone_dir in (live_server.data_root / "samples").iterdir():
            for meta in phone_dir.glob("*.meta.json"):
                stored_ids.add(json.loads(meta.read_text())["sample_id"])
        assert len(stored_ids) == 1000


def test_mid_flight_duplicate_injection(capsys, live_server, tmp_path):
    with criterion(capsys, "dropped acknowledgments cause no server duplicates"):

        class AckDroppingTransport:
            """Delivers, then pretends the reply was lost (once per sample)."""

            def __init__(self, inner: HttpTransport, drop_first: int):
                self.inner = inner
                self.drop_budget = drop_first
                self.dropped: set[str] = set()

            def fetch_config(self, number, timeout):
                return self.inner.fetch_config(number, timeout)

            def upload_sample(self, doc, audio, audio_media_type):
                receipt = self.inner.upload_sample(doc, audio, audio_media_type)
                if (
                    len(self.dropped) < self.drop_budget
                    and doc["sample_id"] not in self.dropped
                ):
                    self.dropped.add(doc["sample_id"])
                    raise TransportError("receipt lost mid-flight")
                return receipt

            def upload_status(self, phone_hash, doc):
                self.inner.upload_status(phone_hash, doc)

            def fetch_response(self, phone_hash):
                return self.inner.fetch_response(phone_hash)

        clock_now = {"t": 0.0}
        transport = AckDroppingTransport(HttpTransport(live_server.url), drop_first=7)
        client = CollectorClient(
            tmp_path / "phone", transport, clock=lambda: clock_now["t"]
        )
        ids = []
        for i in range(20):
            upload = client.new_sample(
                recorded_seconds=1.0, audio_media_type="audio/wav"
            )
            client.enqueue_sample(upload, f"pcm-{i}".encode())
            ids.append(upload.sample_id)

        duplicates = 0
        for _ in range(100):
            reportF = client.flush_queue()
            duplicates += reportF.duplicates
            if client.store.queue_length() == 0:
                break
            clock_now["t"] += 120.0  # jump past any backoff window
        assert client.store.queue_length() == 0
        assert duplicates == 7  # every dropped ack became a server-side dedup

        phone_dir = live_server.data_root / "samples" / client.phone_hash
        stored = [json.loads(m.read_text())["sample_id"] for m in phone_dir.glob("*.meta.json")]
        assert sorted(stored) == sorted(ids)  # each exactly once
        transport.inner.close()


def test_engine_visibility(capsys, live_server):
    with criterion(capsys, "echo engine responses visible within 5 s; engine 0 absent"):
        phones = [new_phone_hash() for _ in range(3)]
        with httpx.Client(base_url=live_server.url) as http:
            for phone in phones:
                last_id = None
                for i in range(4):
                    doc = {
                        "sample_id": new_sample_id(),
                        "phone_hash": phone,
                        "timestamp": format_utc(
                            datetime.now(timezone.utc)
                        ),
                        "config_number": 3,
                        "engine_number": 1,
                    }
                    last_id = doc["sample_id"]
                    files = {
                        "metadata": (None, json.dumps(doc)),
                        "audio": ("audio", b"pcm", "audio/wav"),
                    }
                    assert http.post("/samples", files=files).status_code == 200
                deadline = time.monotonic() + 5.0
                expected = f"received sample {last_id} (4 total for this phone)"
                while time.monotonic() < deadline:
                    resp = http.get(f"/response/{phone}")
                    if resp.status_code == 200 and resp.json()["text"] == expected:
                        break
                    time.sleep(0.02)
                else:
                    raise AssertionError(f"echo response not visible within 5 s for {phone}")

            silent = new_phone_hash()
            doc = {
                "sample_id": new_sample_id(),
                "phone_hash": silent,
                "timestamp": format_utc(datetime.now(timezone.utc)),
                "config_number": 3,
                "engine_number": 0,
            }
            files = {
                "metadata": (None, json.dumps(doc)),
                "audio": ("audio", b"pcm", "audio/wav"),
            }
            assert http.post("/samples", files=files).status_code == 200
            time.sleep(0.3)
            assert http.get(f"/response/{silent}").status_code == 404


def test_export_round_trip(capsys, live_server):
    with criterion(capsys, "daily export partitions 3 UTC days and round-trips bytes"):
        days = [date(2024, 3, 1), date(2024, 3, 2), date(2024, 3, 3)]
        rng = random.Random(50)
        blobs: dict[str, bytes] = {}
        by_day: dict[date, set[str]] = {d: set() for d in days}
        phones = [new_phone_hash() for _ in range(5)]
        with httpx.Client(base_url=live_server.url) as http:
            for i in range(50):
                day = days[i % 3]
                doc = {
                    "sample_id": new_sample_id(),
                    "phone_hash": phones[i % 5],
                    "timestamp": f"{day.isoformat()}T{i % 24:02d}:15:00Z",
                    "config_number": 3,
                }
                blob = rng.randbytes(rng.randint(100, 4000))
                files = {
                    "metadata": (None, json.dumps(doc)),
                    "audio": ("audio", blob, "audio/wav"),
                }
                assert http.post("/samples", files=files).status_code == 200
                blobs[doc["sample_id"]] = blob
                by_day[day].add(doc["sample_id"])

            exported: set[str] = set()
            for day in days:
                resp = http.get(f"/export/{day.isoformat()}")
                assert resp.status_code == 200
                archive = live_server.data_root / "exports" / f"{day.isoformat()}.zip"
                with zipfile.ZipFile(archive) as zf:
                    rows = [
                        json.loads(line)
                        for line in zf.read("manifest.jsonl").decode().splitlines()
                    ]
                    ids = {row["sample_id"] for row in rows}
                    assert ids == by_day[day]  # exactly that day's samples
                    assert not ids & exported
                    exported |= ids
                    for row in rows:
                        extracted = zf.read(row["audio_path"])
                        assert (
                            hashlib.sha256(extracted).hexdigest()
                            == hashlib.sha256(blobs[row["sample_id"]]).hexdigest()
                        )
                        # Manifest rows parse back to the ingested metadata.
                        member = dict(row)
                        member.pop("audio_path")
                        upload = sample_from_doc(member, has_audio=True)
                        assert upload.sample_id == row["sample_id"]
            assert exported == set(blobs)


def test_live_config_swap(capsys, live_server, tmp_path):
    with criterion(capsys, "live config replacement during an active run"):
        version_one = serialize_runtime_config(guided_config(7))
        config = guided_config(7)
        version_two = serialize_runtime_config(
            RuntimeConfig(
                config_number=7,
                selector_string="",
                lists=(config.lists[0],),
                no_recording_text=config.no_recording_text,
                max_recording_time=config.max_recording_time,
            )
        )
        with httpx.Client(base_url=live_server.url) as http:
            assert http.post("/admin/config", content=version_one).status_code == 200

            bodies: list[bytes] = []
            statuses: list[int] = []
            swap_at = 60

            def hammer():
                for i in range(150):
                    if i == swap_at:
                        statuses.append(
                            http.post("/admin/config", content=version_two).status_code
                        )
                    resp = httpx.get(f"{live_server.url}/config/7")
                    statuses.append(resp.status_code)
                    bodies.append(resp.content)

            hammer_thread = threading.Thread(target=hammer)
            hammer_thread.start()
            spec = ScenarioSpec(
                phones=4,
                samples_per_phone=10,
                uptime_fraction=1.0,
                seed=9,
                config_number=7,
            )
            report = run_scenario(spec, live_server.url, tmp_path / "phones")
            hammer_thread.join(timeout=60)
            assert not hammer_thread.is_alive()

        assert all(code == 200 for code in statuses)  # no failed requests
        assert set(bodies) <= {version_one, version_two}  # only complete versions
        assert len(set(bodies)) == 2  # the swap actually happened mid-run
        assert report.delivered == 40
        assert verify_report(report, spec, live_server.data_root) == []
