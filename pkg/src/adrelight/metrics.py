"""Evaluation metrics: single-scale SSIM and illumination cosine similarity
(both on the illuminance channel), plus per-case report assembly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .errors import GeometryError
from .imgcore import (
    Mask,
    RegionQuad,
    RgbImage,
    bilinear_resize,
    crop,
    gaussian_kernel1d,
    quad_bbox,
    to_illuminance,
)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2

# Both inputs are resampled to this square grid before the cosine similarity,
# so differently sized crops compare on a fixed deterministic basis.
ILL_SIM_SIZE = 128


def _window_mean(arr: np.ndarray) -> np.ndarray:
    """Gaussian-weighted local mean with the SSIM window."""
    kernel = gaussian_kernel1d(SSIM_WINDOW, SSIM_SIGMA)
    out = correlate1d(arr, kernel, axis=0, mode="nearest")
    return correlate1d(out, kernel, axis=1, mode="nearest")


def ssim(a: RgbImage, b: RgbImage) -> float:
    """Single-scale SSIM between illuminance channels on a unit dynamic range.

    Gaussian-weighted 11x11 windows (sigma 1.5), Gaussian-weighted moments,
    mean taken over windows fully inside the image.
    """
    if (a.height, a.width) != (b.height, b.width):
        raise GeometryError(
            f"images must share dimensions, got {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    if min(a.width, a.height) < SSIM_WINDOW:
        raise ValueError(
            f"image sides must be at least {SSIM_WINDOW} px for SSIM, got {a.width}x{a.height}"
        )
    x = to_illuminance(a).data
    y = to_illuminance(b).data

    ux = _window_mean(x)
    uy = _window_mean(y)
    uxx = _window_mean(x * x)
    uyy = _window_mean(y * y)
    uxy = _window_mean(x * y)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy

    a1 = 2.0 * ux * uy + SSIM_C1
    a2 = 2.0 * vxy + SSIM_C2
    b1 = ux * ux + uy * uy + SSIM_C1
    b2 = vx + vy + SSIM_C2
    smap = (a1 * a2) / (b1 * b2)

    pad = (SSIM_WINDOW - 1) // 2
    return float(smap[pad:-pad, pad:-pad].mean())


def ill_sim(region: RgbImage, relit_banner: RgbImage) -> float:
    """Cosine similarity of the two illuminance fields on a common grid.

    Scale-invariant by construction; both vectors are nonnegative, so the
    result lies in [0, 1].
    """
    u = to_illuminance(bilinear_resize(region, ILL_SIM_SIZE, ILL_SIM_SIZE)).data.ravel()
    v = to_illuminance(bilinear_resize(relit_banner, ILL_SIM_SIZE, ILL_SIM_SIZE)).data.ravel()
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("illumination similarity is undefined for an all-zero illuminance")
    return float(np.dot(u, v) / (nu * nv))


def evaluate_case(
    frame: RgbImage, mask: Mask, quad: RegionQuad, relit_frame: RgbImage
) -> tuple[float, float]:
    """(ssim, ill_sim) between the original and relit crops of the quad's bbox."""
    if (frame.height, frame.width) != (mask.height, mask.width):
        raise GeometryError(
            "mask must match frame dimensions, got "
            f"{mask.width}x{mask.height} vs {frame.width}x{frame.height}"
        )
    if (frame.height, frame.width) != (relit_frame.height, relit_frame.width):
        raise GeometryError(
            "relit frame must match frame dimensions, got "
            f"{relit_frame.width}x{relit_frame.height} vs {frame.width}x{frame.height}"
        )
    bbox = quad_bbox(quad, frame.width, frame.height)
    original = crop(frame, bbox)
    relit = crop(relit_frame, bbox)
    return ssim(original, relit), ill_sim(original, relit)


@dataclass(frozen=True)
class CaseMetrics:
    case_id: str
    ssim: float
    ill_sim: float


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate metrics (arithmetic means) plus the per-case breakdown.

    lpips stays None unless an external neural-metric service filled it in.
    """

    ssim: float
    ill_sim: float
    cases: tuple[CaseMetrics, ...]
    config: dict = field(default_factory=dict)
    lpips: float | None = None

    def to_dict(self) -> dict:
        return {
            "ssim": self.ssim,
            "ill_sim": self.ill_sim,
            "lpips": self.lpips,
            "cases": [
                {"id": c.case_id, "ssim": c.ssim, "ill_sim": c.ill_sim} for c in self.cases
            ],
            "config": self.config,
        }


def build_report(per_case, config: dict | None = None) -> MetricsReport:
    """Assemble a report from (case_id, ssim, ill_sim) triples."""
    cases = tuple(CaseMetrics(str(cid), float(s), float(i)) for cid, s, i in per_case)
    if not cases:
        raise ValueError("cannot build a metrics report from zero cases")
    return MetricsReport(
        ssim=sum(c.ssim for c in cases) / len(cases),
        ill_sim=sum(c.ill_sim for c in cases) / len(cases),
        cases=cases,
        config=dict(config or {}),
    )


def format_table(report: MetricsReport) -> str:
    """Aligned plain-text table: one row per case plus the mean row."""
    rows = [(c.case_id, f"{c.ssim:.6f}", f"{c.ill_sim:.6f}") for c in report.cases]
    rows.append(("mean", f"{report.ssim:.6f}", f"{report.ill_sim:.6f}"))
    headers = ("case", "ssim", "ill_sim")
    widths = [
        max(len(headers[i]), max(len(r[i]) for r in rows)) for i in range(3)
    ]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * widths[i] for i in range(3)),
    ]
    lines += ["  ".join(r[i].ljust(widths[i]) for i in range(3)) for r in rows]
    return "\n".join(lines) + "\n"
