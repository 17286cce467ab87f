"""HTTP service: routes, validation, dedup, engine visibility, admin swap."""

from __future__ import annotations

import json
import time
import zipfile
from io import BytesIO

import pytest

from voicecollect.core import (
    LocalConfigStatus,
    new_phone_hash,
    parse_runtime_config,
    serialize_runtime_config,
    status_to_doc,
)
from voicecollect.server import CollectionService, create_app

from conftest import guided_config, make_sample_doc


def post_sample(api, doc, audio=b"PCMBYTES", media_type="audio/wav"):
    files = {"metadata": (None, json.dumps(doc))}
    if audio is not None:
        files["audio"] = ("audio", audio, media_type)
    return api.post("/samples", files=files)


def wait_for_response(api, phone_hash, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        resp = api.get(f"/response/{phone_hash}")
        if resp.status_code == 200:
            return resp.json()
        time.sleep(0.02)
    raise AssertionError("no response within the bound")


# --- configs -----------------------------------------------------------------


def test_config_served_byte_identical_on_all_names(api, service):
    expected = serialize_runtime_config(guided_config(3))
    for path in ("/config/3", "/app_runtime_config_file_3.json", "/app_runtime_config_file_3.csv"):
        resp = api.get(path)
        assert resp.status_code == 200
        assert resp.content == expected


def test_unknown_config_is_404(api):
    assert api.get("/config/99").status_code == 404


def test_admin_swap_and_atomicity(api):
    original = api.get("/config/3").content
    replacement = serialize_runtime_config(guided_config(3))
    # A malformed replacement is rejected and the old document stays.
    resp = api.post("/admin/config", content=b'{"config_number": 3, "lists": "oops"}')
    assert resp.status_code == 422
    assert api.get("/config/3").content == original

    doc = json.loads(replacement)
    doc["lists"] = doc["lists"][:1]
    doc["selector_string"] = ""
    new_raw = (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode()
    resp = api.post("/admin/config", content=new_raw)
    assert resp.status_code == 200
    assert resp.json() == {"config_number": 3}
    assert api.get("/config/3").content == new_raw


def test_admin_install_new_number(api):
    raw = serialize_runtime_config(guided_config(8))
    assert api.post("/admin/config", content=raw).status_code == 200
    assert api.get("/config/8").content == raw


def test_admin_config_requires_number(api):
    resp = api.post("/admin/config", content=b'{"lists": []}')
    assert resp.status_code == 422


def test_configs_survive_service_restart(api, service, tmp_path):
    raw = serialize_runtime_config(guided_config(11))
    api.post("/admin/config", content=raw)
    reopened = CollectionService(service.store.root)
    try:
        assert reopened.serve_config(11) == raw
    finally:
        reopened.close()


# --- samples -------------------------------------------------------------------


def test_ingest_and_receipt(api):
    doc = make_sample_doc()
    resp = post_sample(api, doc)
    assert resp.status_code == 200
    body = resp.json()
    assert body == {
        "sample_id": doc["sample_id"],
        "stored": True,
        "duplicate": False,
        "engine_dispatched": False,
    }


def test_duplicate_sample_acknowledged_without_effects(api, service):
    doc = make_sample_doc()
    assert post_sample(api, doc).json()["stored"] is True
    second = post_sample(api, doc).json()
    assert second["duplicate"] is True
    assert second["stored"] is False
    assert len(list(service.store.iter_samples(doc["phone_hash"]))) == 1


def test_text_only_sample_without_audio_part(api, service):
    doc = make_sample_doc(text_input="typed answer", text_only=True)
    resp = post_sample(api, doc, audio=None)
    assert resp.status_code == 200
    [stored] = list(service.store.iter_samples(doc["phone_hash"]))
    assert stored.upload.text_only
    assert stored.audio_path is None


def test_sample_validation_failures(api):
    assert post_sample(api, make_sample_doc(phone_hash="nope")).status_code == 422
    assert post_sample(api, make_sample_doc(timestamp="today")).status_code == 422
    no_text = make_sample_doc()
    assert post_sample(api, no_text, audio=None).status_code == 422
    resp = api.post("/samples", files={"audio": ("audio", b"x", "audio/wav")})
    assert resp.status_code == 422  # metadata part missing
    resp = api.post("/samples", files={"metadata": (None, "not json")})
    assert resp.status_code == 422


def test_audio_media_type_from_part_label(api, service):
    doc = make_sample_doc()
    post_sample(api, doc, audio=b"OggS", media_type="audio/ogg")
    [stored] = list(store_iter(service, doc["phone_hash"]))
    assert stored.upload.audio_media_type == "audio/ogg"
    assert stored.audio_path.suffix == ".ogg"


def store_iter(service, phone_hash):
    return service.store.iter_samples(phone_hash)


# --- engines ---------------------------------------------------------------------


def test_echo_engine_visibility(api):
    doc = make_sample_doc(engine_number=1)
    receipt = post_sample(api, doc).json()
    assert receipt["engine_dispatched"] is True
    body = wait_for_response(api, doc["phone_hash"])
    assert body["text"] == f"received sample {doc['sample_id']} (1 total for this phone)"
    assert body["audio_url"] is None


def test_engine_zero_yields_absence(api):
    doc = make_sample_doc(engine_number=0)
    post_sample(api, doc)
    time.sleep(0.2)
    assert api.get(f"/response/{doc['phone_hash']}").status_code == 404


def test_config_default_engine_applies_when_sample_says_zero(api, service):
    config = guided_config(5)
    raw = serialize_runtime_config(
        parse_runtime_config(
            serialize_runtime_config(config), 5
        )
    )
    doc = json.loads(raw)
    doc["default_engine_number"] = 1
    api.post(
        "/admin/config", content=(json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode()
    )
    sample = make_sample_doc(config_number=5, engine_number=0)
    receipt = post_sample(api, sample).json()
    assert receipt["engine_dispatched"] is True
    wait_for_response(api, sample["phone_hash"])


def test_engine_failure_never_fails_ingestion(tmp_path):
    from fastapi.testclient import TestClient

    from voicecollect.engine import EngineKind, EngineRegistry, EngineSpec

    registry = EngineRegistry()
    registry.register(
        EngineSpec(number=9, kind=EngineKind.REMOTE, endpoint="http://127.0.0.1:1/nope")
    )
    service = CollectionService(tmp_path / "data", default_config_number=3, registry=registry)
    try:
        with TestClient(create_app(service)) as api:
            doc = make_sample_doc(engine_number=9)
            receipt = post_sample(api, doc).json()
            assert receipt["stored"] is True
            assert receipt["engine_dispatched"] is True
            service.dispatcher.shutdown()  # let the doomed dispatch finish
            assert api.get(f"/response/{doc['phone_hash']}").status_code == 404
            assert len(list(service.store.iter_samples(doc["phone_hash"]))) == 1
    finally:
        service.close()


def test_per_phone_responses_follow_sample_order(api):
    phone = new_phone_hash()
    ids = []
    for _ in range(5):
        doc = make_sample_doc(phone, engine_number=1)
        ids.append(doc["sample_id"])
        post_sample(api, doc)
    deadline = time.monotonic() + 5
    while time.monotonic() < deadline:
        body = api.get(f"/response/{phone}").json()
        if body.get("text", "").startswith(f"received sample {ids[-1]}"):
            break
        time.sleep(0.02)
    assert body["text"] == f"received sample {ids[-1]} (5 total for this phone)"


# --- status ----------------------------------------------------------------------


def test_status_upload_and_replacement(api, service):
    phone = new_phone_hash()
    doc = status_to_doc(LocalConfigStatus(language="en"))
    assert api.post(f"/status/{phone}", json=doc).status_code == 200
    doc2 = status_to_doc(LocalConfigStatus(language="ca"))
    assert api.post(f"/status/{phone}", json=doc2).status_code == 200
    stored = service.store.load_status(phone)
    assert stored["status"]["language"] == "ca"


def test_status_rejections(api):
    phone = new_phone_hash()
    bad = status_to_doc(LocalConfigStatus())
    bad["personal_info"] = {"name": "Alice"}
    assert api.post(f"/status/{phone}", json=bad).status_code == 422
    assert api.post("/status/not-a-hash", json=status_to_doc(LocalConfigStatus())).status_code == 422
    assert (
        api.post(f"/status/{phone}", content=b"not json").status_code == 422
    )


# --- responses / schema / export ----------------------------------------------------


def test_response_audio_url_serves_bytes(api, service):
    phone = new_phone_hash()
    service.store.store_response(
        phone, text="hear this", audio=b"WAVDATA", audio_media_type="audio/wav"
    )
    body = api.get(f"/response/{phone}").json()
    assert body["text"] == "hear this"
    assert body["audio_url"] == f"/response/{phone}/audio"
    audio = api.get(body["audio_url"])
    assert audio.status_code == 200
    assert audio.content == b"WAVDATA"


def test_personal_information_request_schema(api):
    resp = api.get("/personal_information_request/3")
    assert resp.status_code == 200
    doc = resp.json()
    ids = [q["id"] for q in doc["questions"]]
    assert "age" in ids and "name" not in ids
    # Any number serves the same fixed first-version schema.
    assert api.get("/personal_information_request/77").content == resp.content


def test_export_route(api):
    doc = make_sample_doc(timestamp="2024-03-01T10:00:00Z")
    post_sample(api, doc)
    resp = api.get("/export/2024-03-01")
    assert resp.status_code == 200
    with zipfile.ZipFile(BytesIO(resp.content)) as zf:
        assert "manifest.jsonl" in zf.namelist()
        rows = [json.loads(l) for l in zf.read("manifest.jsonl").decode().splitlines()]
    assert [r["sample_id"] for r in rows] == [doc["sample_id"]]
    assert api.get("/export/2024-03-01.zip").status_code == 200
    assert api.get("/export/banana").status_code == 422


def test_healthz(api):
    assert api.get("/healthz").text == "ok"
