"""Pydantic request/response models for the /v1 API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class PaletteResponse(BaseModel):
    palette: list[str] = Field(min_length=5, max_length=5)
    session_id: str
    model_version: str


class AdjustRequest(BaseModel):
    session_id: str
    palette: list[str] = Field(min_length=5, max_length=5)


class FieldError(BaseModel):
    field: str
    message: str
