"""FastAPI application: /health, /relight, /segment, /texture.

Error mapping: 422 undecodable payloads or bad prompts/dims, 413 oversized
images, 501 endpoint whose model runtime is not loaded, 500 inference
failure. Successful responses carry base64 PNG payloads.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from PIL import Image
from pydantic import BaseModel

from .codecs import OversizeError, PayloadError, decode_image, encode_image
from .config import ServiceConfig, ServiceRuntimes, build_runtimes


class RelightRequest(BaseModel):
    background: str
    foreground: str
    seed: int = 0
    steps: int = 20


class SegmentRequest(BaseModel):
    image: str
    points: list[tuple[float, float]] | None = None
    box: tuple[float, float, float, float] | None = None


class TextureRequest(BaseModel):
    prompt: str
    width: int
    height: int


def create_app(config: ServiceConfig, runtimes: ServiceRuntimes | None = None) -> FastAPI:
    if runtimes is None:
        runtimes = build_runtimes(config)

    app = FastAPI(title="adrelight-sidecar")

    def require_runtime(kind: str):
        runtime = getattr(runtimes, kind)
        if runtime is None:
            raise HTTPException(
                status_code=501,
                detail={
                    "error": f"no {kind} model is loaded",
                    "capabilities": runtimes.capabilities(),
                },
            )
        return runtime

    def decode_or_reject(blob: str, name: str) -> Image.Image:
        try:
            return decode_image(blob, config.max_side, name)
        except OversizeError as exc:
            raise HTTPException(status_code=413, detail=str(exc)) from exc
        except PayloadError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/health")
    def health():
        return {"status": "ok", "capabilities": runtimes.capabilities()}

    @app.post("/relight")
    def relight(req: RelightRequest):
        runtime = require_runtime("relight")
        background = decode_or_reject(req.background, "background")
        foreground = decode_or_reject(req.foreground, "foreground")
        try:
            output = runtime.relight(background, foreground, seed=req.seed, steps=req.steps)
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"relight inference failed: {exc}") from exc
        return {"output": encode_image(output)}

    @app.post("/segment")
    def segment(req: SegmentRequest):
        runtime = require_runtime("segment")
        image = decode_or_reject(req.image, "image")
        points = req.points or []
        if not points and req.box is None:
            raise HTTPException(status_code=422, detail="provide at least one point or a box")
        width, height = image.size
        for x, y in points:
            if not (0 <= x <= width - 1 and 0 <= y <= height - 1):
                raise HTTPException(
                    status_code=422,
                    detail=f"point ({x}, {y}) lies outside the {width}x{height} image",
                )
        if req.box is not None:
            x0, y0, x1, y1 = req.box
            if not (0 <= x0 < x1 <= width - 1 and 0 <= y0 < y1 <= height - 1):
                raise HTTPException(
                    status_code=422,
                    detail=f"box {req.box} is invalid for a {width}x{height} image",
                )
        try:
            mask = runtime.segment(image, points, req.box)
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"segment inference failed: {exc}") from exc
        return {"mask": encode_image(mask)}

    @app.post("/texture")
    def texture(req: TextureRequest):
        runtime = require_runtime("texture")
        if req.width < 1 or req.height < 1:
            raise HTTPException(
                status_code=422, detail=f"dimensions must be positive, got {req.width}x{req.height}"
            )
        if max(req.width, req.height) > config.max_side:
            raise HTTPException(
                status_code=422,
                detail=f"dimensions {req.width}x{req.height} exceed the {config.max_side} limit",
            )
        try:
            tex = runtime.texture(req.prompt, req.width, req.height)
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"texture inference failed: {exc}") from exc
        return {"texture": encode_image(tex)}

    return app
