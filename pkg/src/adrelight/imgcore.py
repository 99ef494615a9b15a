"""Core pixel types and operators: illuminance conversion, Gaussian filtering,
Otsu thresholding, alpha blending, bilinear resampling, and quad warping.

All samples are stored as float64 in a nominal [0, 1] range; 8-bit conversion
happens only at PNG I/O (round half up).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

from .errors import GeometryError

# Illuminance divisions below this guard fall back to achromatic values.
EPS_DIV = 1e-4

OTSU_BINS = 256


def _owned(arr: np.ndarray) -> np.ndarray:
    """Private, read-only float64 copy so images behave as value data."""
    out = np.array(arr, dtype=np.float64, order="C")
    out.flags.writeable = False
    return out


class _PixelsEq:
    """Content equality for array-backed value types (unhashable on purpose)."""

    __hash__ = None

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class RgbImage(_PixelsEq):
    """H x W x 3 float image, row-major, nominal range [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected nonempty HxWx3 image data, got shape {arr.shape}")
        object.__setattr__(self, "data", _owned(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def clamped(self) -> "RgbImage":
        return RgbImage(np.clip(self.data, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class IlluminanceMap(_PixelsEq):
    """H x W single-channel map of nonnegative brightness samples."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected nonempty HxW map data, got shape {arr.shape}")
        if float(arr.min()) < 0.0:
            raise ValueError("illuminance samples must be nonnegative")
        object.__setattr__(self, "data", _owned(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class Mask(_PixelsEq):
    """H x W soft mask with samples in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected nonempty HxW mask data, got shape {arr.shape}")
        if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
            raise ValueError("mask samples must lie in [0, 1]")
        object.__setattr__(self, "data", _owned(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class RegionQuad:
    """Placement target: four (x, y) corners ordered TL, TR, BR, BL.

    Corners are pixel-center coordinates and must form a strictly convex
    quadrilateral with nonzero area.
    """

    corners: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.corners)
        if len(pts) != 4:
            raise GeometryError(f"quad needs exactly 4 corners, got {len(pts)}")
        crosses = []
        for i in range(4):
            ax, ay = pts[i]
            bx, by = pts[(i + 1) % 4]
            cx, cy = pts[(i + 2) % 4]
            crosses.append((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
        if any(c == 0.0 for c in crosses) or not (
            all(c > 0 for c in crosses) or all(c < 0 for c in crosses)
        ):
            raise GeometryError(f"quad corners are not strictly convex: {pts}")
        object.__setattr__(self, "corners", pts)

    @property
    def xs(self) -> tuple[float, float, float, float]:
        return tuple(p[0] for p in self.corners)

    @property
    def ys(self) -> tuple[float, float, float, float]:
        return tuple(p[1] for p in self.corners)


def _require_same_size(a, b, what: str = "images") -> None:
    if a.data.shape[:2] != b.data.shape[:2]:
        raise GeometryError(
            f"{what} must share dimensions, got "
            f"{a.data.shape[1]}x{a.data.shape[0]} vs {b.data.shape[1]}x{b.data.shape[0]}"
        )


# ---------------------------------------------------------------------------
# Illuminance channel
# ---------------------------------------------------------------------------

def to_illuminance(img: RgbImage) -> IlluminanceMap:
    """Brightness channel used by all shading math: HSV value, max(R, G, B)."""
    return IlluminanceMap(img.data.max(axis=2))


def replace_illuminance(img: RgbImage, new_ill: IlluminanceMap) -> RgbImage:
    """Rescale each pixel's RGB so its illuminance becomes ``new_ill``.

    Hue and saturation are preserved by a per-pixel chroma-preserving scale.
    Pixels darker than EPS_DIV cannot be rescaled meaningfully and become
    achromatic gray at the new illuminance. Output is clamped to [0, 1].
    """
    _require_same_size(img, new_ill)
    old = img.data.max(axis=2)
    safe = old >= EPS_DIV
    scale = np.where(safe, new_ill.data / np.where(safe, old, 1.0), 0.0)
    out = img.data * scale[:, :, None]
    gray = np.broadcast_to(new_ill.data[:, :, None], out.shape)
    out = np.where(safe[:, :, None], out, gray)
    return RgbImage(np.clip(out, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Gaussian filtering
# ---------------------------------------------------------------------------

def gaussian_kernel1d(kernel_size: int, sigma: float | None = None) -> np.ndarray:
    """Normalized 1-D Gaussian taps; sigma defaults to kernel_size / 6."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(f"kernel size must be a positive odd integer, got {kernel_size}")
    if sigma is None:
        sigma = kernel_size / 6.0
    radius = kernel_size // 2
    if radius == 0:
        return np.ones(1, dtype=np.float64)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def _gaussian2d(arr: np.ndarray, kernel_size: int, sigma: float | None = None) -> np.ndarray:
    """Separable Gaussian on a 2-D array, replicate borders, range-preserving."""
    kernel = gaussian_kernel1d(kernel_size, sigma)
    out = correlate1d(arr, kernel, axis=0, mode="nearest")
    out = correlate1d(out, kernel, axis=1, mode="nearest")
    # Normalization leaves ulp-level overshoot; pin the range exactly.
    return np.clip(out, arr.min(), arr.max())


def gaussian_filter(src: IlluminanceMap, kernel_size: int) -> IlluminanceMap:
    """Low-pass the map with a normalized Gaussian, sigma = kernel_size / 6."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(f"kernel size must be a positive odd integer, got {kernel_size}")
    limit = 2 * min(src.width, src.height) - 1
    if kernel_size > limit:
        raise ValueError(
            f"kernel size {kernel_size} too large for {src.width}x{src.height} map (max {limit})"
        )
    return IlluminanceMap(_gaussian2d(src.data, kernel_size))


def gaussian_blur_rgb(img: RgbImage, kernel_size: int, sigma: float | None = None) -> RgbImage:
    """Per-channel Gaussian blur with the same kernel as gaussian_filter."""
    out = np.empty_like(img.data)
    for c in range(3):
        out[:, :, c] = _gaussian2d(img.data[:, :, c], kernel_size, sigma)
    return RgbImage(out)


# ---------------------------------------------------------------------------
# Otsu threshold
# ---------------------------------------------------------------------------

def otsu_threshold(ill: IlluminanceMap) -> float:
    """Bin-center threshold maximizing between-class variance.

    The histogram has 256 bins over [0, max(1, data max)]; splits with an
    empty class are skipped, ties pick the lowest threshold, and a constant
    map returns its own bin center.
    """
    data = ill.data.ravel()
    hi = max(1.0, float(data.max()))
    hist, edges = np.histogram(data, bins=OTSU_BINS, range=(0.0, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    weights = hist.astype(np.float64)

    cum_w = np.cumsum(weights)
    cum_m = np.cumsum(weights * centers)
    total_w = cum_w[-1]
    total_m = cum_m[-1]

    w0 = cum_w
    w1 = total_w - cum_w
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        # All mass in one bin: degenerate histogram.
        return float(centers[int(np.flatnonzero(hist)[0])])

    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = cum_m / w0
        mu1 = (total_m - cum_m) / w1
        var_between = w0 * w1 * (mu0 - mu1) ** 2
    var_between = np.where(valid, var_between, -np.inf)
    return float(centers[int(np.argmax(var_between))])


# ---------------------------------------------------------------------------
# Blending
# ---------------------------------------------------------------------------

def alpha_blend(a: RgbImage, b: RgbImage, alpha: float) -> RgbImage:
    """Per-sample (1 - alpha) * a + alpha * b."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    _require_same_size(a, b)
    return RgbImage((1.0 - alpha) * a.data + alpha * b.data)


# ---------------------------------------------------------------------------
# Resampling and warping
# ---------------------------------------------------------------------------

def _sample_bilinear(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup of HxWxC samples at float coordinates (clamped)."""
    h, w = arr.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    top = arr[y0, x0] * (1.0 - fx) + arr[y0, x1] * fx
    bottom = arr[y1, x0] * (1.0 - fx) + arr[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def bilinear_resize(img: RgbImage, width: int, height: int) -> RgbImage:
    """Resize with bilinear sampling on aligned pixel centers."""
    if width < 1 or height < 1:
        raise ValueError(f"target dimensions must be positive, got {width}x{height}")
    if width == img.width and height == img.height:
        return img
    sx = (np.arange(width, dtype=np.float64) + 0.5) * (img.width / width) - 0.5
    sy = (np.arange(height, dtype=np.float64) + 0.5) * (img.height / height) - 0.5
    xs, ys = np.meshgrid(sx, sy)
    return RgbImage(_sample_bilinear(img.data, xs, ys))


def _homography(src_pts, dst_pts) -> np.ndarray:
    """Direct linear transform for 4 point correspondences."""
    rows = []
    rhs = []
    for (x, y), (u, v) in zip(src_pts, dst_pts):
        rows.append([x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y])
        rows.append([0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y])
        rhs.extend([u, v])
    try:
        h = np.linalg.solve(np.asarray(rows, dtype=np.float64), np.asarray(rhs, dtype=np.float64))
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"degenerate quad: {exc}") from exc
    return np.append(h, 1.0).reshape(3, 3)


def _snap_near_integers(coords: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Collapse float noise so identity-like warps copy pixels exactly."""
    rounded = np.round(coords)
    return np.where(np.abs(coords - rounded) <= tol, rounded, coords)


def _source_corners(width: int, height: int):
    return (
        (0.0, 0.0),
        (width - 1.0, 0.0),
        (width - 1.0, height - 1.0),
        (0.0, height - 1.0),
    )


def quad_bbox(quad: RegionQuad, width: int, height: int) -> tuple[int, int, int, int]:
    """Integer bounding box (x0, y0, x1, y1), end-exclusive, clipped to the canvas."""
    x0 = max(0, int(math.floor(min(quad.xs))))
    y0 = max(0, int(math.floor(min(quad.ys))))
    x1 = min(width, int(math.ceil(max(quad.xs))) + 1)
    y1 = min(height, int(math.ceil(max(quad.ys))) + 1)
    if x1 <= x0 or y1 <= y0:
        raise GeometryError("quad bounding box does not intersect the canvas")
    return x0, y0, x1, y1


def _check_quad_in_bounds(quad: RegionQuad, width: int, height: int) -> None:
    for x, y in quad.corners:
        if not (0.0 <= x <= width - 1.0 and 0.0 <= y <= height - 1.0):
            raise GeometryError(
                f"quad corner ({x}, {y}) outside canvas {width}x{height}"
            )


def warp_to_quad(src: RgbImage, quad: RegionQuad, canvas: RgbImage) -> tuple[RgbImage, Mask]:
    """Paste ``src`` into ``canvas`` under the homography sending its corners to ``quad``.

    Canvas pixels inside the quad are inverse-mapped and bilinearly sampled
    from the source. Returns the composited canvas and the coverage mask.
    """
    _check_quad_in_bounds(quad, canvas.width, canvas.height)
    inv = _homography(quad.corners, _source_corners(src.width, src.height))

    x0, y0, x1, y1 = quad_bbox(quad, canvas.width, canvas.height)
    xs, ys = np.meshgrid(
        np.arange(x0, x1, dtype=np.float64), np.arange(y0, y1, dtype=np.float64)
    )
    denom = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / denom
        sy = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / denom
    sx = _snap_near_integers(sx)
    sy = _snap_near_integers(sy)
    covered = (
        np.isfinite(sx)
        & np.isfinite(sy)
        & (sx >= 0.0)
        & (sx <= src.width - 1.0)
        & (sy >= 0.0)
        & (sy <= src.height - 1.0)
    )

    out = np.array(canvas.data)
    sampled = _sample_bilinear(src.data, sx, sy)
    window = out[y0:y1, x0:x1]
    out[y0:y1, x0:x1] = np.where(covered[:, :, None], sampled, window)
    mask = np.zeros((canvas.height, canvas.width), dtype=np.float64)
    mask[y0:y1, x0:x1] = covered.astype(np.float64)
    return RgbImage(out), Mask(mask)


def rasterize_quad(quad: RegionQuad, width: int, height: int) -> Mask:
    """Binary footprint of the quad over a width x height pixel grid."""
    xs, ys = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    pts = quad.corners
    inside = np.ones((height, width), dtype=bool)
    # Orientation sign from the first corner triple (validated convex).
    ax, ay = pts[0]
    bx, by = pts[1]
    cx, cy = pts[2]
    sign = 1.0 if (bx - ax) * (cy - ay) - (by - ay) * (cx - ax) > 0 else -1.0
    for i in range(4):
        px, py = pts[i]
        qx, qy = pts[(i + 1) % 4]
        cross = (qx - px) * (ys - py) - (qy - py) * (xs - px)
        inside &= sign * cross >= 0.0
    return Mask(inside.astype(np.float64))


def crop(img: RgbImage, box: tuple[int, int, int, int]) -> RgbImage:
    """Crop to an end-exclusive integer box (x0, y0, x1, y1)."""
    x0, y0, x1, y1 = box
    if not (0 <= x0 < x1 <= img.width and 0 <= y0 < y1 <= img.height):
        raise GeometryError(f"crop box {box} invalid for {img.width}x{img.height} image")
    return RgbImage(img.data[y0:y1, x0:x1])


# ---------------------------------------------------------------------------
# PNG I/O (8-bit, linear mapping between [0, 255] and [0, 1])
# ---------------------------------------------------------------------------

def to_uint8(data: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] samples to 8 bits, rounding half up."""
    return np.floor(np.clip(data, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def from_uint8(data: np.ndarray) -> np.ndarray:
    return data.astype(np.float64) / 255.0


def encode_png(img: RgbImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(to_uint8(img.data), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(blob: bytes) -> RgbImage:
    with Image.open(io.BytesIO(blob)) as im:
        arr = np.asarray(im.convert("RGB"))
    return RgbImage(from_uint8(arr))


def encode_png_gray(data: np.ndarray) -> bytes:
    """8-bit grayscale PNG bytes from a [0, 1] HxW array (values are clipped)."""
    buf = io.BytesIO()
    Image.fromarray(to_uint8(np.asarray(data, dtype=np.float64)), mode="L").save(
        buf, format="PNG"
    )
    return buf.getvalue()


def save_rgb(img: RgbImage, path: str | Path) -> None:
    Image.fromarray(to_uint8(img.data), mode="RGB").save(str(path), format="PNG")


def load_rgb(path: str | Path) -> RgbImage:
    with Image.open(str(path)) as im:
        arr = np.asarray(im.convert("RGB"))
    return RgbImage(from_uint8(arr))


def save_mask(mask: Mask, path: str | Path) -> None:
    Image.fromarray(to_uint8(mask.data), mode="L").save(str(path), format="PNG")


def load_mask(path: str | Path) -> Mask:
    with Image.open(str(path)) as im:
        arr = np.asarray(im.convert("L"))
    return Mask(from_uint8(arr))
