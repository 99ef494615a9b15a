"""Pluggable relighting backbones.

Three implementations of the two-image relight(background, foreground)
contract: a synthetic linear light-transport model (exactly linear in the
background before clamping, so Stage-2 differential-probing claims become
testable equalities), an identity stub, and an HTTP client for a remote
relighting service. Also hosts the lamp-lit scene fixtures used to generate
ground-truth test imagery.
"""

from __future__ import annotations

import base64
import binascii
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
import requests

from .errors import BackboneError, ProtocolError
from .imgcore import (
    RgbImage,
    bilinear_resize,
    decode_png,
    encode_png,
    gaussian_blur_rgb,
)

ENV_BACKBONE_URL = "ADRELIGHT_BACKBONE_URL"

# Server-side limit on either image side; the client surfaces HTTP 413 with it.
MAX_IMAGE_SIDE = 4096

DEFAULT_TIMEOUT = 10.0
DEFAULT_SEED = 0
DEFAULT_STEPS = 20


class RelightBackbone(ABC):
    """Two-image relighting contract.

    Implementations must be safe for at least two concurrent in-flight calls
    and must return an image with the foreground's dimensions. Deterministic
    implementations return identical outputs for identical inputs.
    """

    @abstractmethod
    def relight(self, background: RgbImage, foreground: RgbImage) -> RgbImage:
        raise NotImplementedError

    @abstractmethod
    def describe(self) -> dict:
        """JSON-serializable identity and parameters, recorded in manifests."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Synthetic linear light transport
# ---------------------------------------------------------------------------

def synthetic_linear_relight(
    spec_gain: float,
    blur_kernel: int,
    background: RgbImage,
    foreground: RgbImage,
) -> RgbImage:
    """clamp(foreground * gain * blur(background resized to foreground), 0, 1).

    Strictly linear in the background before the final clamp, which is what
    makes differential probing exact on non-clamping inputs.
    """
    bg = bilinear_resize(background, foreground.width, foreground.height)
    light = spec_gain * gaussian_blur_rgb(bg, blur_kernel).data
    return RgbImage(np.clip(foreground.data * light, 0.0, 1.0))


def identity_relight(background: RgbImage, foreground: RgbImage) -> RgbImage:
    """Background-independent stub: returns the foreground unchanged."""
    return foreground


class SyntheticLinearBackbone(RelightBackbone):
    def __init__(self, gain: float = 1.0, blur_kernel: int = 15):
        if not np.isfinite(gain) or gain <= 0.0:
            raise ValueError(f"gain must be a positive finite scalar, got {gain}")
        if blur_kernel < 1 or blur_kernel % 2 == 0:
            raise ValueError(f"blur kernel must be a positive odd integer, got {blur_kernel}")
        self.gain = float(gain)
        self.blur_kernel = int(blur_kernel)

    def relight(self, background: RgbImage, foreground: RgbImage) -> RgbImage:
        return synthetic_linear_relight(self.gain, self.blur_kernel, background, foreground)

    def describe(self) -> dict:
        return {"kind": "synthetic", "gain": self.gain, "blur_kernel": self.blur_kernel}


class IdentityBackbone(RelightBackbone):
    def relight(self, background: RgbImage, foreground: RgbImage) -> RgbImage:
        return identity_relight(background, foreground)

    def describe(self) -> dict:
        return {"kind": "identity"}


# ---------------------------------------------------------------------------
# Remote HTTP client
# ---------------------------------------------------------------------------

def _b64_png(img: RgbImage) -> str:
    return base64.b64encode(encode_png(img)).decode("ascii")


def _decode_response(body: dict, endpoint: str) -> RgbImage:
    if not isinstance(body, dict) or "output" not in body:
        raise ProtocolError(f"backbone at {endpoint} returned no 'output' field")
    try:
        blob = base64.b64decode(body["output"], validate=True)
        return decode_png(blob)
    except (binascii.Error, ValueError, OSError) as exc:
        raise ProtocolError(f"backbone at {endpoint} returned an undecodable image: {exc}") from exc


def remote_relight(
    endpoint: str,
    background: RgbImage,
    foreground: RgbImage,
    timeout: float = DEFAULT_TIMEOUT,
    seed: int = DEFAULT_SEED,
    steps: int = DEFAULT_STEPS,
) -> RgbImage:
    """POST the wire payload to {endpoint}/relight and decode the result.

    Transient failures (connection errors, timeouts, HTTP 5xx) are retried
    once with no backoff, so a dead endpoint costs at most two timeouts.
    """
    url = endpoint.rstrip("/") + "/relight"
    payload = {
        "background": _b64_png(background),
        "foreground": _b64_png(foreground),
        "seed": int(seed),
        "steps": int(steps),
    }
    last_error: Exception | None = None
    for attempt in range(2):
        try:
            resp = requests.post(url, json=payload, timeout=timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_error = exc
            continue
        if resp.status_code >= 500:
            last_error = BackboneError(
                f"backbone at {endpoint} failed with HTTP {resp.status_code}"
            )
            continue
        if resp.status_code == 413:
            raise ProtocolError(
                f"backbone at {endpoint} rejected an oversize image "
                f"(HTTP 413; limit {MAX_IMAGE_SIDE}x{MAX_IMAGE_SIDE})"
            )
        if resp.status_code == 422:
            raise ProtocolError(f"backbone at {endpoint} rejected the payload (HTTP 422)")
        if resp.status_code != 200:
            raise ProtocolError(
                f"backbone at {endpoint} answered unexpected HTTP {resp.status_code}"
            )
        try:
            body = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"backbone at {endpoint} returned non-JSON body: {exc}") from exc
        out = _decode_response(body, endpoint)
        if (out.height, out.width) != (foreground.height, foreground.width):
            raise ProtocolError(
                f"backbone at {endpoint} returned {out.width}x{out.height}, "
                f"expected foreground dimensions {foreground.width}x{foreground.height}"
            )
        return out
    raise BackboneError(f"backbone at {endpoint} unreachable after retry: {last_error}")


class RemoteBackbone(RelightBackbone):
    def __init__(
        self,
        endpoint: str,
        timeout: float = DEFAULT_TIMEOUT,
        seed: int = DEFAULT_SEED,
        steps: int = DEFAULT_STEPS,
    ):
        if not endpoint:
            raise ValueError("remote backbone requires a non-empty endpoint URL")
        self.endpoint = endpoint
        self.timeout = float(timeout)
        self.seed = int(seed)
        self.steps = int(steps)

    def relight(self, background: RgbImage, foreground: RgbImage) -> RgbImage:
        return remote_relight(
            self.endpoint,
            background,
            foreground,
            timeout=self.timeout,
            seed=self.seed,
            steps=self.steps,
        )

    def describe(self) -> dict:
        return {
            "kind": "remote",
            "endpoint": self.endpoint,
            "seed": self.seed,
            "steps": self.steps,
            "timeout": self.timeout,
        }


# ---------------------------------------------------------------------------
# Synthetic scene fixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lamp:
    """Gaussian light splat: intensity * color * exp(-|p - center|^2 / 2 radius^2)."""

    center: tuple[float, float]
    radius: float
    color: tuple[float, float, float]
    intensity: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"lamp radius must be positive, got {self.radius}")
        if self.intensity < 0.0:
            raise ValueError(f"lamp intensity must be nonnegative, got {self.intensity}")
        if len(self.color) != 3 or any(c < 0.0 for c in self.color):
            raise ValueError(f"lamp color must be three nonnegative components, got {self.color}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "color", tuple(float(c) for c in self.color))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "intensity", float(self.intensity))


@dataclass(frozen=True)
class SceneSpec:
    """Lamp-lit floor with known ground-truth illumination per lamp.

    The rendered illumination is additive over lamps, so removing a lamp
    subtracts exactly its term — the ground truth differential probing is
    checked against.
    """

    width: int
    height: int
    base_albedo: RgbImage
    lamps: tuple[Lamp, ...] = field(default_factory=tuple)
    gain: float = 1.0
    blur_kernel: int = 15

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"scene dimensions must be positive, got {self.width}x{self.height}")
        if (self.base_albedo.height, self.base_albedo.width) != (self.height, self.width):
            raise ValueError(
                f"albedo is {self.base_albedo.width}x{self.base_albedo.height}, "
                f"scene is {self.width}x{self.height}"
            )
        if not np.isfinite(self.gain) or self.gain <= 0.0:
            raise ValueError(f"gain must be a positive finite scalar, got {self.gain}")
        if self.blur_kernel < 1 or self.blur_kernel % 2 == 0:
            raise ValueError(f"blur kernel must be a positive odd integer, got {self.blur_kernel}")
        object.__setattr__(self, "lamps", tuple(self.lamps))

    def backbone(self) -> SyntheticLinearBackbone:
        """The linear transport this scene declares for probing tests."""
        return SyntheticLinearBackbone(gain=self.gain, blur_kernel=self.blur_kernel)


def _check_drop(spec: SceneSpec, drop) -> frozenset:
    drop = frozenset(int(i) for i in drop)
    for i in drop:
        if not 0 <= i < len(spec.lamps):
            raise ValueError(f"lamp index {i} out of range for {len(spec.lamps)} lamps")
    return drop


def render_illumination(spec: SceneSpec, drop=frozenset()) -> np.ndarray:
    """Unclamped H x W x 3 illumination field, omitting any dropped lamps."""
    drop = _check_drop(spec, drop)
    xs, ys = np.meshgrid(
        np.arange(spec.width, dtype=np.float64), np.arange(spec.height, dtype=np.float64)
    )
    light = np.zeros((spec.height, spec.width, 3), dtype=np.float64)
    for i, lamp in enumerate(spec.lamps):
        if i in drop:
            continue
        cx, cy = lamp.center
        splat = lamp.intensity * np.exp(
            -((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * lamp.radius**2)
        )
        light += splat[:, :, None] * np.asarray(lamp.color)
    return light


def render_scene(spec: SceneSpec, drop_lamps=frozenset()) -> RgbImage:
    """Rendered frame: clamp(albedo * illumination, 0, 1)."""
    light = render_illumination(spec, drop_lamps)
    return RgbImage(np.clip(spec.base_albedo.data * light, 0.0, 1.0))
