"""HTTP surface over the collection service.

Route paths are part of the protocol and must not drift:

    GET  /config/{number}
    GET  /app_runtime_config_file_{number}.json   (same body as /config/{number})
    GET  /app_runtime_config_file_{number}.csv    (legacy name, same body)
    GET  /personal_information_request/{number}
    POST /samples                                 multipart: metadata + audio
    POST /status/{phone_hash}
    GET  /response/{phone_hash}
    GET  /response/{phone_hash}/audio
    POST /admin/config
    GET  /export/{YYYY-MM-DD}        (".zip" suffix also accepted)
"""

from __future__ import annotations

import json
import logging
from datetime import date

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from starlette.datastructures import UploadFile

from ..core import (
    ProtocolError,
    default_question_schema,
    is_phone_hash,
    sample_from_doc,
    serialize_schema,
)
from ..storage import StorageFailure
from .models import AckModel, ConfigInstalledModel, IngestReceiptModel, ResponseModel
from .service import CollectionService, ConfigNotFound

logger = logging.getLogger(__name__)


def create_app(service: CollectionService) -> FastAPI:
    app = FastAPI(title="voicecollect", docs_url=None, redoc_url=None)
    app.state.service = service
    schema_bytes = serialize_schema(default_question_schema())

    @app.exception_handler(ProtocolError)
    async def _protocol_error(request: Request, exc: ProtocolError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(StorageFailure)
    async def _storage_failure(request: Request, exc: StorageFailure) -> JSONResponse:
        logger.error("storage failure: %s", exc)
        return JSONResponse(status_code=500, content={"detail": "storage failure"})

    def _config_response(number: int) -> Response:
        try:
            raw = service.serve_config(number)
        except ConfigNotFound:
            return JSONResponse(status_code=404, content={"detail": f"no config {number}"})
        return Response(content=raw, media_type="application/json")

    @app.get("/config/{number}")
    def get_config(number: int) -> Response:
        return _config_response(number)

    # The filename-style paths serve byte-identical bodies; phones may ask
    # by either name, and old builds still ask for the csv name.
    @app.get("/app_runtime_config_file_{number}.json")
    def get_config_file(number: int) -> Response:
        return _config_response(number)

    @app.get("/app_runtime_config_file_{number}.csv")
    def get_config_file_legacy(number: int) -> Response:
        return _config_response(number)

    @app.get("/personal_information_request/{number}")
    def get_personal_information_request(number: int) -> Response:
        # One fixed question set for now; the number keys future variants.
        return Response(content=schema_bytes, media_type="application/json")

    @app.post("/samples")
    async def post_sample(request: Request) -> Response:
        form = await request.form()
        metadata_part = form.get("metadata")
        if metadata_part is None:
            return JSONResponse(status_code=422, content={"detail": "missing metadata part"})
        if isinstance(metadata_part, UploadFile):
            metadata_raw = await metadata_part.read()
        else:
            metadata_raw = str(metadata_part).encode("utf-8")
        try:
            doc = json.loads(metadata_raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return JSONResponse(status_code=422, content={"detail": "metadata is not valid JSON"})

        audio_part = form.get("audio")
        audio: bytes | None = None
        if isinstance(audio_part, UploadFile):
            audio = await audio_part.read()
            if isinstance(doc, dict) and not doc.get("audio_media_type"):
                if audio_part.content_type:
                    doc["audio_media_type"] = audio_part.content_type
        elif audio_part is not None:
            audio = str(audio_part).encode("utf-8")

        upload = sample_from_doc(doc, has_audio=audio is not None)
        receipt = service.ingest_sample(upload, audio)
        return JSONResponse(
            content=IngestReceiptModel(
                sample_id=receipt.sample_id,
                stored=receipt.stored,
                duplicate=receipt.duplicate,
                engine_dispatched=receipt.engine_dispatched,
            ).model_dump()
        )

    @app.post("/status/{phone_hash}")
    async def post_status(phone_hash: str, request: Request) -> Response:
        if not is_phone_hash(phone_hash):
            return JSONResponse(status_code=422, content={"detail": "malformed phone_hash"})
        try:
            doc = json.loads((await request.body()).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return JSONResponse(status_code=422, content={"detail": "status is not valid JSON"})
        service.ingest_status(phone_hash, doc)
        return JSONResponse(content=AckModel().model_dump())

    @app.get("/response/{phone_hash}")
    def get_response(phone_hash: str) -> Response:
        if not is_phone_hash(phone_hash):
            return JSONResponse(status_code=422, content={"detail": "malformed phone_hash"})
        stored = service.get_response(phone_hash)
        if stored is None:
            return JSONResponse(status_code=404, content={"detail": "no response"})
        audio_url = f"/response/{phone_hash}/audio" if stored.audio_path else None
        return JSONResponse(
            content=ResponseModel(text=stored.text, audio_url=audio_url).model_dump()
        )

    @app.get("/response/{phone_hash}/audio")
    def get_response_audio(phone_hash: str) -> Response:
        if not is_phone_hash(phone_hash):
            return JSONResponse(status_code=422, content={"detail": "malformed phone_hash"})
        stored = service.get_response(phone_hash)
        if stored is None or stored.audio_path is None:
            return JSONResponse(status_code=404, content={"detail": "no response audio"})
        return FileResponse(stored.audio_path, media_type=stored.audio_media_type)

    @app.post("/admin/config")
    async def post_admin_config(request: Request) -> Response:
        number = service.apply_admin_config(await request.body())
        return JSONResponse(content=ConfigInstalledModel(config_number=number).model_dump())

    @app.get("/export/{day}")
    def get_export(day: str) -> Response:
        if day.endswith(".zip"):
            day = day[: -len(".zip")]
        try:
            parsed = date.fromisoformat(day)
        except ValueError:
            return JSONResponse(status_code=422, content={"detail": "day must be YYYY-MM-DD"})
        bundle = service.store.build_daily_export(parsed)
        return FileResponse(
            bundle.archive_path,
            media_type="application/zip",
            filename=bundle.archive_path.name,
        )

    @app.get("/healthz")
    def healthz() -> PlainTextResponse:
        return PlainTextResponse("ok")

    return app
