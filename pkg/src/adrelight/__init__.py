"""adrelight: training-free banner relighting.

Transfers a scene region's illumination onto an inserted banner by shading
decomposition, differential probing of a pluggable relighting backbone, and
shadow-aware compositing. Ships a synthetic linear light-transport backbone
so every stage is verifiable offline.
"""

from .backbone import (
    ENV_BACKBONE_URL,
    IdentityBackbone,
    Lamp,
    RelightBackbone,
    RemoteBackbone,
    SceneSpec,
    SyntheticLinearBackbone,
    render_illumination,
    render_scene,
)
from .errors import AdRelightError, BackboneError, GeometryError, ProtocolError, StageError
from .imgcore import IlluminanceMap, Mask, RegionQuad, RgbImage
from .metrics import MetricsReport, evaluate_case, ill_sim, ssim
from .probe import LightFeature, build_probe_pair, differential_feature, normalize_feature
from .relight import PipelineConfig, PipelineResult, run_pipeline
from .shading import ShadingDecomposition, apply_texture, decompose, transfer_shading

__version__ = "0.1.0"

__all__ = [
    "AdRelightError",
    "BackboneError",
    "ENV_BACKBONE_URL",
    "GeometryError",
    "IdentityBackbone",
    "IlluminanceMap",
    "Lamp",
    "LightFeature",
    "Mask",
    "MetricsReport",
    "PipelineConfig",
    "PipelineResult",
    "ProtocolError",
    "RegionQuad",
    "RelightBackbone",
    "RemoteBackbone",
    "RgbImage",
    "SceneSpec",
    "ShadingDecomposition",
    "StageError",
    "SyntheticLinearBackbone",
    "apply_texture",
    "build_probe_pair",
    "decompose",
    "differential_feature",
    "evaluate_case",
    "ill_sim",
    "normalize_feature",
    "render_illumination",
    "render_scene",
    "run_pipeline",
    "ssim",
    "transfer_shading",
    "__version__",
]
