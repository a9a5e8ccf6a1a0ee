"""HTTP front for the engine.

The service layer stays thin: it parses transport details (JSON bodies,
multipart uploads), hands dicts to the engine, and maps the engine's error
types to status codes. All command semantics live below it, so in-process use
of the engine and use over HTTP behave identically.
"""

from __future__ import annotations

import re
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from pointchat import kernels
from pointchat.config import ServiceConfig
from pointchat.engine import Engine
from pointchat.errors import (
    DragWithoutSelection,
    EmptyTrace,
    EmptyUtterance,
    MalformedManifest,
    PointChatError,
    SeedOutOfBounds,
    TurnInFlight,
    UnknownArtifact,
    UnknownSession,
    UnknownTarget,
)

_NOT_FOUND = (UnknownSession, UnknownArtifact, UnknownTarget)
_UNPROCESSABLE = (
    EmptyTrace,
    EmptyUtterance,
    MalformedManifest,
    SeedOutOfBounds,
    DragWithoutSelection,
)


def parse_multipart(body: bytes, content_type: str) -> list[dict]:
    """Minimal multipart/form-data parser: returns parts as
    {name, filename, data} dicts. Enough for file uploads; no nested types."""
    match = re.search(r'boundary="?([^";,]+)"?', content_type or "")
    if not match:
        raise ValueError("multipart body without a boundary parameter")
    boundary = b"--" + match.group(1).encode()
    parts = []
    for section in body.split(boundary)[1:]:
        if section.startswith(b"--"):
            break
        if section.startswith(b"\r\n"):
            section = section[2:]
        head, sep, data = section.partition(b"\r\n\r\n")
        if not sep:
            continue
        if data.endswith(b"\r\n"):
            data = data[:-2]
        disposition = ""
        for line in head.split(b"\r\n"):
            if line.lower().startswith(b"content-disposition"):
                disposition = line.decode("utf-8", "replace")
        name_match = re.search(r'name="([^"]*)"', disposition)
        file_match = re.search(r'filename="([^"]*)"', disposition)
        parts.append({
            "name": name_match.group(1) if name_match else "",
            "filename": file_match.group(1) if file_match else None,
            "data": data,
        })
    return parts


def create_app(engine: Optional[Engine] = None, config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    engine = engine or Engine(config.engine)
    app = FastAPI(title="pointchat", docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.state.config = config

    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    if config.ui_root:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_root, html=True), name="ui")

    @app.exception_handler(PointChatError)
    async def _domain_error(_request, exc: PointChatError):
        if isinstance(exc, _NOT_FOUND):
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        if isinstance(exc, TurnInFlight):
            return JSONResponse(status_code=409, content={"detail": str(exc)})
        if isinstance(exc, _UNPROCESSABLE):
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(_request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(KeyError)
    async def _key_error(_request, exc: KeyError):
        return JSONResponse(status_code=422, content={"detail": f"missing field {exc}"})

    @app.get("/health")
    async def health():
        return {"status": "ok", "kernel_backend": kernels.BACKEND}

    @app.get("/registry")
    async def registry():
        return {"tools": engine.registry_view()}

    @app.post("/sessions", status_code=201)
    async def create_session():
        return {"session_id": engine.create_session()}

    @app.get("/sessions/{session_id}/history")
    async def history(session_id: str):
        return engine.history(session_id)

    @app.post("/sessions/{session_id}/artifacts", status_code=201)
    async def upload(session_id: str, request: Request):
        content_type = request.headers.get("content-type", "")
        if not content_type.startswith("multipart/form-data"):
            raise ValueError("upload must be multipart/form-data with a 'file' part")
        parts = parse_multipart(await request.body(), content_type)
        file_part = next((p for p in parts if p["name"] == "file" and p["filename"]), None)
        if file_part is None:
            raise ValueError("multipart body is missing a 'file' part with a filename")
        ocr_part = next((p for p in parts if p["name"] == "ocr"), None)
        return engine.upload_artifact(
            session_id,
            file_part["filename"],
            file_part["data"],
            ocr_sidecar=ocr_part["data"] if ocr_part else None,
        )

    @app.get("/sessions/{session_id}/artifacts/{artifact_id}")
    async def artifact(session_id: str, artifact_id: str):
        data, content_type, record = engine.artifact_payload(session_id, artifact_id)
        return Response(content=data, media_type=content_type,
                        headers={"X-Artifact-Kind": record["kind"]})

    @app.get("/sessions/{session_id}/frames/{frame_path:path}")
    async def frame(session_id: str, frame_path: str):
        return Response(content=engine.frame_payload(session_id, f"frames/{frame_path}"),
                        media_type="image/png")

    @app.post("/sessions/{session_id}/pointer")
    async def pointer(session_id: str, request: Request):
        payload = await request.json()
        if not isinstance(payload, dict):
            raise ValueError("pointer body must be a JSON object")
        return engine.pointer_turn(session_id, payload)

    @app.post("/sessions/{session_id}/chat")
    async def chat(session_id: str, request: Request):
        payload = await request.json()
        if not isinstance(payload, dict) or not str(payload.get("utterance", "")).strip():
            raise ValueError("chat body needs a non-empty 'utterance'")
        return engine.chat_turn(session_id, str(payload["utterance"]))

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    host, _, port = config.listen.partition(":")
    uvicorn.run(create_app(config=config), host=host or "127.0.0.1", port=int(port or 8787))
