"""Base64 PNG decoding/encoding and payload validation for all endpoints."""

from __future__ import annotations

import base64
import binascii
import io

from PIL import Image


class PayloadError(ValueError):
    """The client payload cannot be decoded (maps to HTTP 422)."""


class OversizeError(ValueError):
    """Image dimensions exceed the service limit (maps to HTTP 413)."""


def decode_image(blob: str, max_side: int, name: str) -> Image.Image:
    """Decode a base64 PNG string into an RGB image.

    The size check runs on the image header, before any pixel data is
    decoded, so oversized uploads are rejected cheaply.
    """
    try:
        raw = base64.b64decode(blob, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise PayloadError(f"{name} is not valid base64") from exc
    try:
        img = Image.open(io.BytesIO(raw))
        width, height = img.size
    except OSError as exc:
        raise PayloadError(f"{name} is not a decodable image") from exc
    if max(width, height) > max_side:
        raise OversizeError(
            f"{name} is {width}x{height}; image sides must not exceed {max_side}"
        )
    try:
        rgb = img.convert("RGB")
        rgb.load()
    except OSError as exc:
        raise PayloadError(f"{name} holds truncated or corrupt image data") from exc
    return rgb


def encode_image(img: Image.Image) -> str:
    """PNG-encode an image and return it as a base64 string."""
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")
