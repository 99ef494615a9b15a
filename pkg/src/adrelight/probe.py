"""Stage 2: build the full/masked background pair, run both through the
relighting backbone, and form the differential light feature (the signed
residual between the two outputs).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backbone import RelightBackbone
from .errors import BackboneError, GeometryError
from .imgcore import EPS_DIV, Mask, RgbImage

MASK_FILL_VALUE = 0.5  # neutral gray injects no illumination bias

PROBE_MODES = ("gray", "banner")


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, order="C")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LightFeature:
    """Signed residual between backbone outputs plus a displayable rescale.

    stats holds per-channel (min, max, mean absolute) of the residual; the
    residual is recoverable from (normalized, stats) because normalization
    divides by the global max magnitude, which stats preserve.
    """

    residual: np.ndarray
    normalized: RgbImage
    stats: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "residual", _frozen(self.residual))

    @property
    def max_abs(self) -> float:
        return max(max(abs(lo), abs(hi)) for lo, hi, _ in self.stats)


def channel_stats(residual: np.ndarray) -> tuple[tuple[float, float, float], ...]:
    """Per-channel (min, max, mean absolute) triples."""
    return tuple(
        (
            float(residual[:, :, c].min()),
            float(residual[:, :, c].max()),
            float(np.abs(residual[:, :, c]).mean()),
        )
        for c in range(3)
    )


def build_probe_pair(frame: RgbImage, mask: Mask) -> tuple[RgbImage, RgbImage]:
    """Return the frame and a copy with the masked region filled neutral gray.

    The fill is soft-mask weighted, so a zero-valued mask is a no-op.
    """
    if (frame.height, frame.width) != (mask.height, mask.width):
        raise GeometryError(
            "mask must match frame dimensions, got "
            f"{mask.width}x{mask.height} vs {frame.width}x{frame.height}"
        )
    m = mask.data[:, :, None]
    masked = (1.0 - m) * frame.data + m * MASK_FILL_VALUE
    return frame, RgbImage(masked)


def normalize_feature(residual: np.ndarray) -> RgbImage:
    """Affine-map a signed residual into [0, 1] jointly over all channels.

    out = 0.5 + 0.5 * residual / max(|residual|, eps); zero maps to 0.5. The
    joint (not per-channel) scale preserves the residual's color balance.
    """
    arr = np.asarray(residual, dtype=np.float64)
    scale = max(float(np.abs(arr).max()), EPS_DIV)
    return RgbImage(np.clip(0.5 + 0.5 * arr / scale, 0.0, 1.0))


def denormalize_feature(normalized: RgbImage, stats) -> np.ndarray:
    """Invert normalize_feature given the stats recorded alongside it."""
    scale = max(max(max(abs(lo), abs(hi)) for lo, hi, _ in stats), EPS_DIV)
    return (normalized.data - 0.5) * (2.0 * scale)


def make_probe_card(
    width: int,
    height: int,
    mode: str = "gray",
    banner: RgbImage | None = None,
) -> RgbImage:
    """Foreground used for the two probing passes.

    gray mode isolates the illumination response with a uniform 0.5 card;
    banner mode probes with the shade-aligned banner itself.
    """
    if mode == "gray":
        if width < 1 or height < 1:
            raise ValueError(f"probe card dimensions must be positive, got {width}x{height}")
        return RgbImage(np.full((height, width, 3), MASK_FILL_VALUE))
    if mode == "banner":
        if banner is None:
            raise ValueError("banner probe mode requires a banner image")
        return banner
    raise ValueError(f"unknown probe mode {mode!r}, expected one of {PROBE_MODES}")


def differential_feature(
    backbone: RelightBackbone,
    b_full: RgbImage,
    b_masked: RgbImage,
    probe_fg: RgbImage,
) -> LightFeature:
    """Residual between relighting against the full and masked backgrounds.

    The two backbone calls are independent and run concurrently.
    """
    if (b_full.height, b_full.width) != (b_masked.height, b_masked.width):
        raise GeometryError(
            "probe backgrounds must share dimensions, got "
            f"{b_full.width}x{b_full.height} vs {b_masked.width}x{b_masked.height}"
        )
    with ThreadPoolExecutor(max_workers=2) as pool:
        fut_full = pool.submit(backbone.relight, b_full, probe_fg)
        fut_masked = pool.submit(backbone.relight, b_masked, probe_fg)
        outs = []
        for name, fut in (("full", fut_full), ("masked", fut_masked)):
            try:
                outs.append(fut.result())
            except Exception as exc:
                if isinstance(exc, BackboneError):
                    raise type(exc)(f"probe call against {name} background failed: {exc}") from exc
                raise BackboneError(
                    f"probe call against {name} background failed: {exc}"
                ) from exc
    residual = outs[0].data - outs[1].data
    return LightFeature(
        residual=residual,
        normalized=normalize_feature(residual),
        stats=channel_stats(residual),
    )
