"""Stage 3 and pipeline orchestration: light-gradient prior, probe/gradient
background mix, the relighting call, Otsu-based soft shadows, and feathered
compositing of the relit banner back into the frame.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, replace

import numpy as np

from .backbone import RelightBackbone
from .errors import BackboneError, GeometryError, StageError
from .imgcore import (
    EPS_DIV,
    IlluminanceMap,
    Mask,
    RegionQuad,
    RgbImage,
    _gaussian2d,
    crop,
    bilinear_resize,
    gaussian_filter,
    otsu_threshold,
    quad_bbox,
    replace_illuminance,
    to_illuminance,
    warp_to_quad,
)
from .probe import (
    LightFeature,
    PROBE_MODES,
    build_probe_pair,
    differential_feature,
    make_probe_card,
)
from .shading import apply_texture, transfer_shading_parts

BACKBONE_KINDS = ("synthetic", "identity", "remote")

# Ablation variants: drop the gradient prior, drop shade alignment, or drop
# the differential feature (realized as the two endpoints of the mix weight).
VARIANTS = {
    "m3": {"gradient_mix": 0.0},
    "m4": {"shade_align": False},
    "m5": {"gradient_mix": 1.0},
}


@dataclass(frozen=True)
class PipelineConfig:
    """All scalar knobs of the pipeline.

    Kernel sizes are odd pixel counts; the three alphas are blend weights in
    [0, 1]. gradient_mix weighs the smooth light gradient against the
    normalized differential feature when building the relighting background
    (1.0 = gradient only, 0.0 = feature only).
    """

    shade_kernel: int = 99
    gradient_kernel: int = 21
    shadow_kernel: int = 15
    texture_alpha: float = 0.3
    gradient_mix: float = 0.4
    shadow_alpha: float = 0.2
    probe_mode: str = "gray"
    backbone: str = "synthetic"
    shade_align: bool = True
    feather: float = 2.0

    def __post_init__(self):
        for name in ("shade_kernel", "gradient_kernel", "shadow_kernel"):
            k = getattr(self, name)
            if not isinstance(k, int) or k < 1 or k % 2 == 0:
                raise ValueError(f"{name} must be a positive odd integer, got {k!r}")
        if self.gradient_kernel >= self.shade_kernel:
            raise ValueError(
                f"gradient_kernel ({self.gradient_kernel}) must be smaller than "
                f"shade_kernel ({self.shade_kernel})"
            )
        for name in ("texture_alpha", "gradient_mix", "shadow_alpha"):
            a = getattr(self, name)
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {a!r}")
        if self.probe_mode not in PROBE_MODES:
            raise ValueError(f"probe_mode must be one of {PROBE_MODES}, got {self.probe_mode!r}")
        if self.backbone not in BACKBONE_KINDS:
            raise ValueError(f"backbone must be one of {BACKBONE_KINDS}, got {self.backbone!r}")
        if not self.feather >= 0.0:
            raise ValueError(f"feather must be nonnegative, got {self.feather!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "PipelineConfig":
        unknown = set(values) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    def with_variant(self, variant: str) -> "PipelineConfig":
        key = variant.lower()
        if key not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}, expected one of {sorted(VARIANTS)}")
        return replace(self, **VARIANTS[key])


@dataclass(frozen=True)
class PipelineResult:
    """Final frame plus every intermediate needed to audit a run."""

    final_frame: RgbImage
    relit_banner: RgbImage
    intermediates: dict
    timings: dict


def light_gradient(region_ill: IlluminanceMap, gradient_kernel: int) -> IlluminanceMap:
    """Low-frequency illumination structure of the region."""
    return gaussian_filter(region_ill, gradient_kernel)


def mix_background(
    gradient: IlluminanceMap, eps_normalized: RgbImage, gradient_mix: float
) -> RgbImage:
    """Convex mix of the gradient prior (broadcast to RGB) and the feature."""
    if not 0.0 <= gradient_mix <= 1.0:
        raise ValueError(f"gradient_mix must lie in [0, 1], got {gradient_mix}")
    if (gradient.height, gradient.width) != (eps_normalized.height, eps_normalized.width):
        raise GeometryError(
            "gradient and feature must share dimensions, got "
            f"{gradient.width}x{gradient.height} vs "
            f"{eps_normalized.width}x{eps_normalized.height}"
        )
    mixed = gradient_mix * gradient.data[:, :, None] + (1.0 - gradient_mix) * eps_normalized.data
    return RgbImage(mixed)


def relight_banner(
    backbone: RelightBackbone, probe_background: RgbImage, banner: RgbImage
) -> RgbImage:
    """Single backbone call on the mixed background; output clamped to [0, 1]."""
    try:
        out = backbone.relight(probe_background, banner)
    except BackboneError:
        raise
    except Exception as exc:
        raise BackboneError(f"relighting call failed: {exc}") from exc
    return out.clamped()


def shadow_attenuation(
    region_ill: IlluminanceMap, shadow_kernel: int
) -> tuple[IlluminanceMap, float]:
    """Soft shadow factor df = min(1, smoothed / threshold) and the threshold.

    The region illuminance is pre-smoothed so the Otsu split follows broad
    shadow areas instead of texture speckle.
    """
    smooth = gaussian_filter(region_ill, shadow_kernel)
    thr = otsu_threshold(smooth)
    df = np.minimum(1.0, smooth.data / max(thr, EPS_DIV))
    return IlluminanceMap(df), thr


def apply_shadow(relit: RgbImage, df: IlluminanceMap, shadow_alpha: float) -> RgbImage:
    """Attenuate the relit banner's illuminance: alpha*ill + (1-alpha)*ill*df.

    df <= 1, so this never brightens a pixel. The blend is factored as
    ill * (alpha + (1-alpha)*df) because that scale provably stays <= 1.0
    in floating point, while the expanded sum can overshoot by an ulp.
    """
    if not 0.0 <= shadow_alpha <= 1.0:
        raise ValueError(f"shadow_alpha must lie in [0, 1], got {shadow_alpha}")
    if (relit.height, relit.width) != (df.height, df.width):
        raise GeometryError(
            "shadow factor must match the relit banner, got "
            f"{df.width}x{df.height} vs {relit.width}x{relit.height}"
        )
    ill = to_illuminance(relit)
    scale = shadow_alpha + (1.0 - shadow_alpha) * df.data
    return replace_illuminance(relit, IlluminanceMap(ill.data * scale))


def composite(
    frame: RgbImage, relit_banner: RgbImage, quad: RegionQuad, feather: float = 2.0
) -> RgbImage:
    """Warp the banner onto the quad and blend with a feathered coverage mask.

    feather is the Gaussian sigma in pixels; 0 gives a hard paste.
    """
    warped, coverage = warp_to_quad(relit_banner, quad, frame)
    if feather <= 0.0:
        weights = coverage.data
    else:
        kernel = 2 * math.ceil(3.0 * feather) + 1
        limit = 2 * min(frame.width, frame.height) - 1
        kernel = min(kernel, limit if limit % 2 == 1 else limit - 1)
        weights = _gaussian2d(coverage.data, kernel, sigma=feather)
    out = frame.data * (1.0 - weights[:, :, None]) + warped.data * weights[:, :, None]
    return RgbImage(out)


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - start


def run_pipeline(
    frame: RgbImage,
    banner: RgbImage,
    mask: Mask,
    quad: RegionQuad,
    texture: RgbImage | None = None,
    cfg: PipelineConfig | None = None,
    backbone: RelightBackbone | None = None,
) -> PipelineResult:
    """Run all three stages plus compositing; the first failure aborts with a
    stage-tagged error. Every intermediate is recorded in the result.
    """
    if cfg is None:
        cfg = PipelineConfig()
    if backbone is None:
        raise ValueError("run_pipeline requires a backbone instance")

    timings: dict = {}
    inter: dict = {}

    with _stage("geometry", timings):
        if (frame.height, frame.width) != (mask.height, mask.width):
            raise GeometryError(
                "mask must match frame dimensions, got "
                f"{mask.width}x{mask.height} vs {frame.width}x{frame.height}"
            )
        bbox = quad_bbox(quad, frame.width, frame.height)
        for x, y in quad.corners:
            if not (0.0 <= x <= frame.width - 1.0 and 0.0 <= y <= frame.height - 1.0):
                raise GeometryError(f"quad corner ({x}, {y}) outside frame")

    with _stage("shade", timings):
        region = crop(frame, bbox)
        sized = bilinear_resize(banner, region.width, region.height)
        textured = apply_texture(sized, texture, cfg.texture_alpha) if texture is not None else sized
        if cfg.shade_align:
            aligned, region_parts, banner_parts = transfer_shading_parts(
                textured, region, cfg.shade_kernel
            )
            inter["region_decomposition"] = region_parts
            inter["banner_decomposition"] = banner_parts
        else:
            aligned = textured
        inter["region"] = region
        inter["banner_resized"] = sized
        inter["banner_textured"] = textured
        inter["banner_aligned"] = aligned

    with _stage("probe", timings):
        b_full, b_masked = build_probe_pair(frame, mask)
        card = make_probe_card(region.width, region.height, cfg.probe_mode, banner=aligned)
        feature = differential_feature(backbone, b_full, b_masked, card)
        inter["masked_background"] = b_masked
        inter["probe_card"] = card
        inter["feature"] = feature

    with _stage("relight", timings):
        region_ill = to_illuminance(region)
        gradient = light_gradient(region_ill, cfg.gradient_kernel)
        probe_background = mix_background(gradient, feature.normalized, cfg.gradient_mix)
        relit_raw = relight_banner(backbone, probe_background, aligned)
        shadow_factor, threshold = shadow_attenuation(region_ill, cfg.shadow_kernel)
        relit = apply_shadow(relit_raw, shadow_factor, cfg.shadow_alpha)
        inter["gradient"] = gradient
        inter["probe_background"] = probe_background
        inter["relit_raw"] = relit_raw
        inter["shadow_factor"] = shadow_factor
        inter["shadow_threshold"] = threshold

    with _stage("composite", timings):
        final = composite(frame, relit, quad, cfg.feather)

    return PipelineResult(
        final_frame=final, relit_banner=relit, intermediates=inter, timings=timings
    )
