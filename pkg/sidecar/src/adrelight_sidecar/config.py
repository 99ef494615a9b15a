"""Service configuration and runtime assembly.

Startup rules: echo mode needs no checkpoints and serves every endpoint with
a deterministic stand-in. Outside echo mode the relight checkpoint is
mandatory (the service refuses to start without it), while segment and
texture are optional — endpoints without a runtime answer 501. Model loading
is delegated to the RUNTIME_LOADERS registry so heavyweight backends can be
plugged in without changing the service; this build registers none.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .runtimes import (
    BoxFillSegmenter,
    EchoRelight,
    HashedNoiseTexture,
    RelightRuntime,
    SegmentRuntime,
    TextureRuntime,
)

DEFAULT_MAX_SIDE = 4096

# kind -> {loader name -> factory(checkpoint_path, device) -> runtime}
RUNTIME_LOADERS: dict[str, dict[str, Callable[[str, str], object]]] = {
    "relight": {},
    "segment": {},
    "texture": {},
}


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    echo: bool = False
    relight_checkpoint: str | None = None
    segment_checkpoint: str | None = None
    texture_checkpoint: str | None = None
    device: str = "cpu"
    max_side: int = DEFAULT_MAX_SIDE
    default_seed: int = 0
    default_steps: int = 20

    def __post_init__(self):
        if self.max_side < 1:
            raise ValueError(f"max_side must be positive, got {self.max_side}")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port must lie in [0, 65535], got {self.port}")
        if self.default_steps < 1:
            raise ValueError(f"default_steps must be positive, got {self.default_steps}")


@dataclass(frozen=True)
class ServiceRuntimes:
    relight: RelightRuntime | None
    segment: SegmentRuntime | None
    texture: TextureRuntime | None

    def capabilities(self) -> list[str]:
        return [
            name
            for name in ("relight", "segment", "texture")
            if getattr(self, name) is not None
        ]


def _load_model_runtime(kind: str, checkpoint: str | None, device: str):
    if checkpoint is None:
        return None
    if not Path(checkpoint).is_file():
        raise ValueError(f"{kind} checkpoint not found: {checkpoint}")
    loaders = RUNTIME_LOADERS[kind]
    if not loaders:
        raise RuntimeError(
            f"no {kind} model loader is registered in this build; "
            "register one in RUNTIME_LOADERS or run with --echo"
        )
    name, factory = next(iter(sorted(loaders.items())))
    return factory(checkpoint, device)


def build_runtimes(config: ServiceConfig) -> ServiceRuntimes:
    """Assemble endpoint runtimes, enforcing the startup rules."""
    if config.echo:
        return ServiceRuntimes(
            relight=EchoRelight(),
            segment=BoxFillSegmenter(),
            texture=HashedNoiseTexture(),
        )
    if config.relight_checkpoint is None:
        raise ValueError(
            "a relight checkpoint is required; pass --relight-checkpoint "
            "or enable echo mode with --echo"
        )
    return ServiceRuntimes(
        relight=_load_model_runtime("relight", config.relight_checkpoint, config.device),
        segment=_load_model_runtime("segment", config.segment_checkpoint, config.device),
        texture=_load_model_runtime("texture", config.texture_checkpoint, config.device),
    )
