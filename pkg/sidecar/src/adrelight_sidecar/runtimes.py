"""Inference runtimes behind the HTTP endpoints.

The echo runtimes are complete, deterministic stand-ins: loopback relighting,
box-fill segmentation, and hash-seeded noise textures. They exist so clients
can exercise the full wire protocol without model checkpoints. Model-backed
runtimes plug in through the loader registry in config.py and must implement
the same call signatures.
"""

from __future__ import annotations

import zlib
from typing import Protocol, Sequence

import numpy as np
from PIL import Image

Point = Sequence[float]
Box = Sequence[float]


class RelightRuntime(Protocol):
    def relight(self, background: Image.Image, foreground: Image.Image, seed: int, steps: int) -> Image.Image: ...


class SegmentRuntime(Protocol):
    def segment(self, image: Image.Image, points: Sequence[Point], box: Box | None) -> Image.Image: ...


class TextureRuntime(Protocol):
    def texture(self, prompt: str, width: int, height: int) -> Image.Image: ...


class EchoRelight:
    """Loopback relighting: the foreground comes back untouched."""

    def relight(self, background, foreground, seed, steps):
        return foreground


class BoxFillSegmenter:
    """Filled-rectangle masks: the prompt box, or a square around a point.

    Output is an 8-bit grayscale mask with the same dimensions as the input,
    255 inside the selected region and 0 outside.
    """

    def segment(self, image, points, box):
        width, height = image.size
        mask = np.zeros((height, width), dtype=np.uint8)
        if box is not None:
            x0, y0, x1, y1 = (int(round(v)) for v in box)
        else:
            px, py = (int(round(v)) for v in points[0])
            half = max(2, min(width, height) // 8)
            x0, y0, x1, y1 = px - half, py - half, px + half, py + half
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(width - 1, x1), min(height - 1, y1)
        mask[y0 : y1 + 1, x0 : x1 + 1] = 255
        return Image.fromarray(mask, mode="L")


class HashedNoiseTexture:
    """Deterministic noise textures seeded by the prompt and dimensions."""

    def texture(self, prompt, width, height):
        seed = zlib.crc32(f"{prompt}|{width}x{height}".encode("utf-8"))
        rng = np.random.default_rng(seed)
        data = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        return Image.fromarray(data, mode="RGB")
