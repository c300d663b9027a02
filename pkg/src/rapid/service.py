"""HTTP service exposing drafting, search, and keyframe browsing to the UI.

All shared state (index, manifest, exemplars, gazetteer, video metadata)
loads once at startup and is immutable afterwards; every endpoint is a
side-effect-free read except /api/submit, which forwards the operator's
chosen keyframe to a configurable webhook (or logs it when none is set).
Validation failures, including unknown request fields, return 400.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, ConfigDict

from . import drafting
from .config import ServiceConfig
from .drafting import ChatDrafter, MockDrafter, generate_drafts
from .embedding import EmbeddingStore, HttpEmbeddingBackend, MockEmbeddingBackend
from .errors import (
    ConfigurationError,
    DraftingError,
    IngestionError,
    NotFoundError,
    ParseError,
    TransportError,
    ValidationError,
)
from .index import EmbeddingIndex
from .keyframes import Manifest
from .pipeline import SearchEngine, SearchRequest

logger = logging.getLogger("rapid.service")


class AugmentBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    query: str
    n_drafts: Optional[int] = None


class SearchBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    original_query: str
    drafts: list[str] = []
    k: Optional[int] = None
    K: Optional[int] = None
    ocr_filter: Optional[str] = None
    include_original_as_draft: bool = True


class SubmitBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    keyframe_id: int


def load_video_meta(path: str | Path) -> dict[str, dict]:
    """Per-video URL/fps asset: JSONL of {video_id, url, fps?}."""
    meta: dict[str, dict] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            meta[str(obj["video_id"])] = {
                "url": obj.get("url"),
                "fps": float(obj["fps"]) if "fps" in obj else None,
            }
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"{path}:{lineno}: malformed video metadata: {exc}") from exc
    return meta


def build_backend(config: ServiceConfig):
    if config.embedding_backend == "mock":
        return MockEmbeddingBackend(config.embedding_dimension)
    return HttpEmbeddingBackend(config.embedding_url, config.embedding_dimension)


def build_drafter(config: ServiceConfig):
    if config.llm_url:
        examples = drafting.load_examples(config.examples_path or drafting.default_examples_path())
        return ChatDrafter(url=config.llm_url, model=config.llm_model or "", examples=examples)
    gazetteer = drafting.load_gazetteer(config.gazetteer_path or drafting.default_gazetteer_path())
    return MockDrafter(gazetteer)


def create_app(config: ServiceConfig) -> FastAPI:
    manifest = Manifest.load(config.manifest_path)
    store = EmbeddingStore.load(config.store_path)
    if store.dimension != config.embedding_dimension:
        raise ConfigurationError(
            f"store dimension {store.dimension} != embedding.dimension {config.embedding_dimension}"
        )
    engine = SearchEngine(EmbeddingIndex.from_store(store), manifest, build_backend(config))
    drafter = build_drafter(config)
    video_meta = load_video_meta(config.video_meta_path) if config.video_meta_path else {}

    app = FastAPI(title="rapid", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.engine = engine
    app.state.drafter = drafter
    app.state.video_meta = video_meta

    from fastapi.middleware.cors import CORSMiddleware

    # the UI may be served from a dev origin; every endpoint is a read
    # except /api/submit, so a permissive policy is safe here
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.exception_handler(ValidationError)
    async def on_validation(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(NotFoundError)
    async def on_not_found(request: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    def frame_payload(keyframe_id: int) -> dict:
        record = manifest.get(keyframe_id)
        return {
            "keyframe_id": record.keyframe_id,
            "video_id": record.video_id,
            "frame_index": record.frame_index,
            "image_url": f"/api/keyframes/{record.keyframe_id}/image",
        }

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "keyframes": len(manifest),
            "dimension": engine.index.dimension,
            "defaults": {
                "n_drafts": config.n_drafts_default,
                "n_selected": config.n_selected_default,
                "k_per_draft": config.k_per_draft_default,
                "final_k": config.final_k_default,
                "neighbor_radius": config.neighbor_radius_default,
            },
        }

    @app.post("/api/augment")
    def augment(body: AugmentBody):
        if not body.query.strip():
            raise HTTPException(status_code=400, detail="query must be non-empty")
        n = body.n_drafts if body.n_drafts is not None else config.n_drafts_default
        if n < 1:
            raise HTTPException(status_code=400, detail="n_drafts must be >= 1")
        try:
            drafts = generate_drafts(body.query, n, app.state.drafter)
        except (TransportError, DraftingError) as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        except ParseError as exc:
            return {"drafts": [], "warning": f"drafting response was unparseable: {exc}"}
        if not drafts:
            return {"drafts": [], "warning": "drafting returned no usable drafts"}
        return {"drafts": drafts}

    @app.post("/api/search")
    def search(body: SearchBody):
        if app.state.engine is None:
            raise HTTPException(status_code=503, detail="index not loaded")
        request = SearchRequest(
            original_query=body.original_query,
            drafts=tuple(body.drafts),
            k_per_draft=body.k if body.k is not None else config.k_per_draft_default,
            final_k=body.K if body.K is not None else config.final_k_default,
            ocr_filter=body.ocr_filter,
            include_original_as_draft=body.include_original_as_draft,
        )
        try:
            ranked = engine.search(request)
        except TransportError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        results = []
        for keyframe_id, score in ranked:
            payload = frame_payload(keyframe_id)
            payload["score"] = score
            results.append(payload)
        return {"results": results}

    @app.get("/api/keyframes/{keyframe_id}/neighbors")
    def neighbors(keyframe_id: int, pi: Optional[int] = None):
        radius = pi if pi is not None else config.neighbor_radius_default
        window = engine.neighbor_window(keyframe_id, radius)
        return {
            "center": keyframe_id,
            "radius": window.radius,
            "frames": [frame_payload(fid) for fid in window.frames],
        }

    @app.get("/api/keyframes/{keyframe_id}/image")
    def image(keyframe_id: int):
        record = manifest.get(keyframe_id)
        path = Path(record.image_path)
        if not path.is_absolute():
            path = config.base_dir / path
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"image for keyframe {keyframe_id} not found")
        return FileResponse(path)

    @app.get("/api/keyframes/{keyframe_id}/video_link")
    def video_link(keyframe_id: int):
        record = manifest.get(keyframe_id)
        meta = video_meta.get(record.video_id, {})
        fps = meta.get("fps") or config.fps_default
        return {
            "url": meta.get("url"),
            "timestamp_seconds": record.frame_index / fps,
        }

    @app.post("/api/submit")
    def submit(body: SubmitBody):
        record = manifest.get(body.keyframe_id)
        payload = {
            "keyframe_id": record.keyframe_id,
            "video_id": record.video_id,
            "frame_index": record.frame_index,
        }
        if config.submit_url:
            import httpx

            try:
                resp = httpx.post(config.submit_url, json=payload, timeout=10.0)
                resp.raise_for_status()
            except httpx.HTTPError as exc:
                raise HTTPException(status_code=502, detail=f"submit webhook failed: {exc}") from exc
            return {"status": "forwarded", **payload}
        logger.info("submission (no webhook configured): %s", payload)
        return {"status": "logged", **payload}

    if config.ui_dist_path:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.ui_dist_path, html=True), name="ui")

    return app
