"""Stage 1: texture blending, shading/structure factorization of illuminance,
and transfer of a scene region's shading onto the banner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .imgcore import (
    EPS_DIV,
    IlluminanceMap,
    RgbImage,
    alpha_blend,
    bilinear_resize,
    gaussian_filter,
    replace_illuminance,
    to_illuminance,
)

# Quotients above this are shadow-edge fireflies; cap them before transfer.
STRUCTURE_MAX = 4.0

DEFAULT_TEXTURE_ALPHA = 0.3


@dataclass(frozen=True)
class ShadingDecomposition:
    """Low-frequency shading and the detail quotient that reconstructs the input.

    shading * structure recovers the source illuminance up to the division
    guard and the structure cap.
    """

    shading: IlluminanceMap
    structure: IlluminanceMap


def decompose(ill: IlluminanceMap, kernel_size: int) -> ShadingDecomposition:
    """Split illuminance into smooth shading and a bounded detail quotient."""
    shading = gaussian_filter(ill, kernel_size)
    structure = np.clip(ill.data / (shading.data + EPS_DIV), 0.0, STRUCTURE_MAX)
    return ShadingDecomposition(shading=shading, structure=IlluminanceMap(structure))


def apply_texture(banner: RgbImage, texture: RgbImage, alpha: float = DEFAULT_TEXTURE_ALPHA) -> RgbImage:
    """Blend a texture over the banner; the texture is resized to fit first."""
    fitted = bilinear_resize(texture, banner.width, banner.height)
    return alpha_blend(banner, fitted, alpha)


def transfer_shading_parts(
    banner: RgbImage, region: RgbImage, kernel_size: int
) -> tuple[RgbImage, ShadingDecomposition, ShadingDecomposition]:
    """transfer_shading plus the two decompositions it used, for auditing."""
    if (banner.height, banner.width) != (region.height, region.width):
        raise GeometryError(
            "banner must be resized to region dimensions before shading transfer, got "
            f"{banner.width}x{banner.height} vs {region.width}x{region.height}"
        )
    region_parts = decompose(to_illuminance(region), kernel_size)
    banner_parts = decompose(to_illuminance(banner), kernel_size)
    new_ill = np.clip(region_parts.shading.data * banner_parts.structure.data, 0.0, 1.0)
    out = replace_illuminance(banner, IlluminanceMap(new_ill))
    return out, region_parts, banner_parts


def transfer_shading(banner: RgbImage, region: RgbImage, kernel_size: int) -> RgbImage:
    """Give the banner the region's shading while keeping its own detail.

    Both images are decomposed with the same kernel; the new banner
    illuminance is region shading times banner structure, clamped to [0, 1].
    """
    out, _, _ = transfer_shading_parts(banner, region, kernel_size)
    return out
