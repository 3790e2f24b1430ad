"""HTTP gateway for the three-step workflow: palette, adjust, colorize."""

from __future__ import annotations

import json
import logging
import time

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Response, UploadFile

from culturecolor.colors import Palette
from culturecolor.colorizer import colorize
from culturecolor.encoders import ContextInput
from culturecolor.imaging import decode_image, resize_gray, to_grayscale
from culturecolor.service.config import ServiceConfig
from culturecolor.service.schemas import AdjustRequest, PaletteResponse
from culturecolor.service.state import FeedbackLog, ModelRegistry, SessionStore

logger = logging.getLogger(__name__)


def _bad_request(field: str, message: str) -> HTTPException:
    return HTTPException(status_code=400, detail={"field": field, "message": message})


def create_app(config: ServiceConfig, registry: ModelRegistry | None = None) -> FastAPI:
    app = FastAPI(title="culturecolor", version="0.1.0")
    registry = registry or ModelRegistry()
    if registry.palette_model is None and config.palette_model:
        registry.load_palette(config.palette_model)
    if registry.colorizer_model is None and config.colorizer_model:
        registry.load_colorizer(config.colorizer_model)

    sessions = SessionStore(ttl_seconds=config.session_ttl_seconds)
    feedback = FeedbackLog(config.data_dir)
    categories = list(config.categories)
    for model in (registry.palette_model, registry.colorizer_model):
        if model is not None and model.category_names and model.category_names != categories:
            raise ValueError(
                f"configured categories {categories} do not match the loaded "
                f"model's categories {model.category_names}"
            )
    metrics = {"colorize_requests": 0, "colorize_latency_ms_total": 0.0}

    app.state.config = config
    app.state.registry = registry
    app.state.sessions = sessions
    app.state.feedback = feedback
    app.state.metrics = metrics

    @app.get("/v1/categories", response_model=list[str])
    def get_categories():
        return categories

    @app.post("/v1/palette", response_model=PaletteResponse)
    async def make_palette(
        text: str = Form(""),
        category: str = Form(...),
        image: UploadFile = File(...),
        seed: int | None = Form(None),
    ):
        model = registry.palette_model
        if model is None:
            raise HTTPException(status_code=503, detail="no palette model loaded")
        if category not in categories:
            raise _bad_request("category", f"unknown category {category!r}")
        raw = await image.read()
        try:
            rgb = decode_image(raw)
        except ValueError as exc:
            raise _bad_request("image", str(exc))
        gray_full = to_grayscale(rgb)
        context = ContextInput(
            tokens=model.vocabulary.encode(text) if model.vocabulary else (),
            image=resize_gray(gray_full, model.encoder_config.image_size),
            category_id=categories.index(category),
        )
        effective_seed = int(seed) if seed is not None else int(np.random.default_rng().integers(2**31))
        palette = model.sample_palette(context, seed=effective_seed)
        session = sessions.create(
            text=text,
            category=category,
            image_sha256=feedback.store_image(raw),
            gray_full=gray_full,
            context=context,
            original_palette=palette,
            model_version=model.version,
        )
        return PaletteResponse(
            palette=palette.to_hex(), session_id=session.session_id, model_version=model.version
        )

    @app.post("/v1/palette/adjust", status_code=204)
    def adjust_palette(request: AdjustRequest):
        session = sessions.get(request.session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {request.session_id!r}")
        try:
            palette = Palette.from_hex(request.palette)
        except ValueError as exc:
            raise _bad_request("palette", str(exc))
        feedback.append(session, palette)  # durable before the response
        sessions.set_adjusted(session.session_id, palette)
        return Response(status_code=204)

    @app.post("/v1/colorize")
    async def colorize_image(
        session_id: str | None = Form(None),
        palette: str | None = Form(None),
        image: UploadFile | None = File(None),
        text: str = Form(""),
        category: str | None = Form(None),
        seed: int = Form(0),
    ):
        model = registry.colorizer_model
        if model is None:
            raise HTTPException(status_code=503, detail="no colorizer model loaded")

        explicit_palette = None
        if palette is not None:
            try:
                explicit_palette = Palette.from_hex(json.loads(palette))
            except (ValueError, json.JSONDecodeError) as exc:
                raise _bad_request("palette", f"expected JSON array of 5 hex colors: {exc}")

        if session_id is not None:
            session = sessions.get(session_id)
            if session is None:
                raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
            gray_full = session.gray_full
            use_palette = explicit_palette or session.active_palette
            tokens = session.context.tokens
            category_id = session.context.category_id
        else:
            if explicit_palette is None or image is None:
                raise _bad_request(
                    "session_id", "provide either session_id or both palette and image"
                )
            if category is not None and category not in categories:
                raise _bad_request("category", f"unknown category {category!r}")
            try:
                gray_full = to_grayscale(decode_image(await image.read()))
            except ValueError as exc:
                raise _bad_request("image", str(exc))
            use_palette = explicit_palette
            tokens = model.vocabulary.encode(text) if model.vocabulary else ()
            category_id = categories.index(category) if category is not None else 0

        context = ContextInput(
            tokens=tokens,
            image=resize_gray(gray_full, model.encoder_config.image_size),
            category_id=category_id,
        )
        start = time.perf_counter()
        result = colorize(model, gray_full, use_palette, context, seed=seed)
        latency_ms = (time.perf_counter() - start) * 1000.0
        metrics["colorize_requests"] += 1
        metrics["colorize_latency_ms_total"] += latency_ms
        logger.info("colorize %dx%d in %.1f ms", *result.shape, latency_ms)
        return Response(
            content=result.png_bytes(),
            media_type="image/png",
            headers={"X-Latency-Ms": f"{latency_ms:.1f}"},
        )

    return app
