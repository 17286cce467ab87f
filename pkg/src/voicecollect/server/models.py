"""Wire models for the HTTP layer."""

from __future__ import annotations

from pydantic import BaseModel


class IngestReceiptModel(BaseModel):
    sample_id: str
    stored: bool
    duplicate: bool
    engine_dispatched: bool


class AckModel(BaseModel):
    ok: bool = True


class ResponseModel(BaseModel):
    text: str | None = None
    audio_url: str | None = None


class ConfigInstalledModel(BaseModel):
    config_number: int


class ErrorModel(BaseModel):
    detail: str
