"""Deterministic synthetic fixtures: lamp-lit benchmark scenes for the
directional evaluation and randomized scene specs for probing tests.

Everything is seeded; the same seed always yields the same scene.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import Lamp, SceneSpec, render_scene
from .imgcore import Mask, RegionQuad, RgbImage, rasterize_quad

FRAME_WIDTH = 160
FRAME_HEIGHT = 120

# Quad corners (TL, TR, BR, BL) of the banner placement used by benchmarks;
# the 100x60 bounding box keeps the default 99-tap shading kernel legal.
BENCH_QUAD = ((30.0, 30.0), (129.0, 30.0), (129.0, 89.0), (30.0, 89.0))


def checker_albedo(
    width: int, height: int, tile: int = 8, low: float = 0.79, high: float = 0.85
) -> RgbImage:
    """Low-contrast checkerboard floor texture."""
    ys, xs = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    cells = ((xs // tile) + (ys // tile)) % 2
    plane = np.where(cells == 0, low, high).astype(np.float64)
    return RgbImage(np.repeat(plane[:, :, None], 3, axis=2))


def glyph_banner(
    rng: np.random.Generator,
    width: int = 120,
    height: int = 72,
    shade_floor: float = 0.15,
) -> RgbImage:
    """Bright banner with dark logo-like blocks and a baked-in shading ramp.

    The multiplicative ramp runs in a random direction from ``shade_floor``
    up to 1.0, mimicking an ad photographed under its own studio lighting.
    That baked-in gradient is unrelated to any scene the banner is placed
    into, so swaps that keep the banner's own illuminance carry it into the
    frame while shading alignment strips it.
    """
    data = np.full((height, width, 3), 0.95)
    for _ in range(rng.integers(3, 6)):
        bw = int(rng.integers(width // 8, width // 3))
        bh = int(rng.integers(height // 6, height // 3))
        x0 = int(rng.integers(0, width - bw))
        y0 = int(rng.integers(0, height - bh))
        data[y0 : y0 + bh, x0 : x0 + bw] = rng.uniform(0.72, 0.84)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    ys, xs = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    proj = np.cos(theta) * xs / (width - 1) + np.sin(theta) * ys / (height - 1)
    ramp = (proj - proj.min()) / (proj.max() - proj.min())
    shade = shade_floor + (1.0 - shade_floor) * ramp
    return RgbImage(data * shade[:, :, None])


@dataclass(frozen=True)
class BenchmarkCase:
    """One lamp-lit scene plus the banner and placement geometry."""

    spec: SceneSpec
    frame: RgbImage
    banner: RgbImage
    mask: Mask
    quad: RegionQuad


def benchmark_case(seed: int) -> BenchmarkCase:
    """Lamp-lit floor with a pronounced one-sided illumination gradient.

    A key lamp sits just off the left or right frame edge and an ambient lamp
    fills from the center, so the banner region sees a strong bright-to-dark
    ramp. Intensities stay low enough that the rendered frame never clamps.
    """
    rng = np.random.default_rng(seed)
    albedo = checker_albedo(FRAME_WIDTH, FRAME_HEIGHT)

    side = rng.choice((-1.0, 1.0))
    key_x = FRAME_WIDTH / 2 + side * (FRAME_WIDTH / 2 + rng.uniform(0.0, 20.0))
    key_y = float(rng.uniform(35.0, 85.0))
    key = Lamp(
        center=(key_x, key_y),
        radius=float(rng.uniform(55.0, 75.0)),
        color=(1.0, float(rng.uniform(0.9, 1.0)), float(rng.uniform(0.8, 0.95))),
        intensity=float(rng.uniform(0.55, 0.65)),
    )
    ambient = Lamp(
        center=(FRAME_WIDTH / 2, FRAME_HEIGHT / 2),
        radius=220.0,
        color=(1.0, 1.0, 1.0),
        intensity=float(rng.uniform(0.20, 0.26)),
    )
    spec = SceneSpec(
        width=FRAME_WIDTH,
        height=FRAME_HEIGHT,
        base_albedo=albedo,
        lamps=(key, ambient),
        gain=1.3,
        blur_kernel=31,
    )
    quad = RegionQuad(BENCH_QUAD)
    return BenchmarkCase(
        spec=spec,
        frame=render_scene(spec),
        banner=glyph_banner(rng),
        mask=rasterize_quad(quad, FRAME_WIDTH, FRAME_HEIGHT),
        quad=quad,
    )


def random_scene_spec(rng: np.random.Generator, max_light: float = 0.9) -> SceneSpec:
    """Small random lamp scene whose lighting never exceeds max_light.

    Keeping peak illumination (and gain * illumination) below 1 means the
    linear backbone's clamp never engages, which probing-exactness tests
    rely on.
    """
    width = int(rng.integers(24, 49))
    height = int(rng.integers(24, 49))
    albedo = RgbImage(rng.uniform(0.2, 1.0, size=(height, width, 3)))
    gain = float(rng.uniform(0.6, 1.4))

    lamps = []
    for _ in range(int(rng.integers(1, 4))):
        lamps.append(
            Lamp(
                center=(float(rng.uniform(0, width)), float(rng.uniform(0, height))),
                radius=float(rng.uniform(width / 4, width)),
                color=tuple(rng.uniform(0.5, 1.0, size=3)),
                intensity=float(rng.uniform(0.2, 0.6)),
            )
        )
    # Rescale intensities so gain * peak illumination stays below max_light.
    peak = sum(l.intensity * max(l.color) for l in lamps) * gain
    if peak > max_light:
        scale = max_light / peak
        lamps = [
            Lamp(center=l.center, radius=l.radius, color=l.color, intensity=l.intensity * scale)
            for l in lamps
        ]
    blur = int(rng.choice((5, 9, 15)))
    return SceneSpec(
        width=width,
        height=height,
        base_albedo=albedo,
        lamps=tuple(lamps),
        gain=gain,
        blur_kernel=blur,
    )
