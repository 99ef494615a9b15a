"""Command-line entry point.

Subcommands:
  relight  run the full pipeline on a frame/banner pair
  synth    render a lamp-lit synthetic scene from a JSON spec
  probe    compute and persist the differential light feature
  eval     score relit frames against their originals

Exit codes: 0 success, 2 invalid arguments/config, 3 I/O failure,
4 backbone failure, 5 geometry failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .backbone import (
    ENV_BACKBONE_URL,
    IdentityBackbone,
    Lamp,
    RemoteBackbone,
    SceneSpec,
    SyntheticLinearBackbone,
    render_illumination,
    render_scene,
)
from .errors import BackboneError, GeometryError, StageError
from .imgcore import (
    Mask,
    RegionQuad,
    RgbImage,
    encode_png,
    encode_png_gray,
    load_mask,
    load_rgb,
    rasterize_quad,
)
from .metrics import build_report, evaluate_case, format_table
from .probe import build_probe_pair, differential_feature, make_probe_card
from .relight import VARIANTS, PipelineConfig, run_pipeline

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_BACKBONE = 4
EXIT_GEOMETRY = 5

PRESETS = ("paper", "m1", "m2")

_CONFIG_FLAGS = (
    # (flag, config key, type)
    ("--shade-kernel", "shade_kernel", int),
    ("--gradient-kernel", "gradient_kernel", int),
    ("--shadow-kernel", "shadow_kernel", int),
    ("--texture-alpha", "texture_alpha", float),
    ("--gradient-mix", "gradient_mix", float),
    ("--shadow-alpha", "shadow_alpha", float),
    ("--feather", "feather", float),
)


# ---------------------------------------------------------------------------
# Atomic output helpers
# ---------------------------------------------------------------------------

def _atomic_bytes(path: Path, blob: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_json(path: Path, obj) -> None:
    _atomic_bytes(path, json.dumps(obj, indent=2, sort_keys=True).encode("utf-8") + b"\n")


def _write_rgb(path: Path, img: RgbImage) -> None:
    _atomic_bytes(path, encode_png(img))


def _write_gray(path: Path, data) -> None:
    _atomic_bytes(path, encode_png_gray(data))


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Input parsing helpers
# ---------------------------------------------------------------------------

def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_quad(path) -> RegionQuad:
    data = _load_json(path)
    if not isinstance(data, dict) or "corners" not in data:
        raise ValueError(f"quad file {path} must be a JSON object with a 'corners' key")
    corners = data["corners"]
    if not isinstance(corners, list) or len(corners) != 4:
        raise ValueError(f"quad file {path} must list exactly 4 corners")
    return RegionQuad(tuple((float(x), float(y)) for x, y in corners))


def _quad_from_mask(mask: Mask) -> RegionQuad:
    """Axis-aligned bounding rectangle of the mask's active pixels."""
    ys, xs = np.nonzero(mask.data >= 0.5)
    if xs.size == 0:
        raise GeometryError("mask selects no pixels; provide --quad explicitly")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    return RegionQuad(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))


def _load_preset(name: str) -> dict:
    ref = resources.files("adrelight").joinpath(f"presets/{name}.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def _resolve_config(args) -> PipelineConfig:
    """defaults < preset < config file < explicit flags; variant forced last."""
    values: dict = {}
    if getattr(args, "preset", None):
        values.update(_load_preset(args.preset))
    if getattr(args, "config", None):
        file_values = _load_json(args.config)
        if not isinstance(file_values, dict):
            raise ValueError(f"config file {args.config} must hold a JSON object")
        values.update(file_values)
    for _, key, _ in _CONFIG_FLAGS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    for key in ("probe_mode", "backbone"):
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    if getattr(args, "shade_align", None) is not None:
        values["shade_align"] = args.shade_align
    cfg = PipelineConfig.from_dict(values)
    if getattr(args, "variant", None):
        cfg = cfg.with_variant(args.variant)
    return cfg


def _build_backbone(cfg: PipelineConfig, args):
    if cfg.backbone == "synthetic":
        return SyntheticLinearBackbone(gain=args.gain, blur_kernel=args.backbone_blur)
    if cfg.backbone == "identity":
        return IdentityBackbone()
    url = getattr(args, "backbone_url", None) or os.environ.get(ENV_BACKBONE_URL)
    if not url:
        raise ValueError(
            f"remote backbone selected but no URL given; set {ENV_BACKBONE_URL} "
            "or pass --backbone-url"
        )
    return RemoteBackbone(url, timeout=args.timeout, seed=args.seed, steps=args.steps)


def _feature_stats_dict(stats) -> dict:
    mins, maxes, mean_abs = zip(*stats)
    return {"min": list(mins), "max": list(maxes), "mean_abs": list(mean_abs)}


def _digest_inputs(paths: dict) -> dict:
    return {
        name: {"path": str(p), "sha256": _sha256(p)}
        for name, p in paths.items()
        if p is not None
    }


# ---------------------------------------------------------------------------
# relight
# ---------------------------------------------------------------------------

def cmd_relight(args) -> int:
    if args.mask is None and args.quad is None:
        raise ValueError("provide --mask, --quad, or both")

    frame = load_rgb(args.frame)
    banner = load_rgb(args.banner)
    quad = _load_quad(args.quad) if args.quad else None
    mask = load_mask(args.mask) if args.mask else None
    if quad is None:
        quad = _quad_from_mask(mask)
    if mask is None:
        mask = rasterize_quad(quad, frame.width, frame.height)
    texture = load_rgb(args.texture) if args.texture else None

    cfg = _resolve_config(args)
    backbone = _build_backbone(cfg, args)
    result = run_pipeline(
        frame, banner, mask, quad, texture=texture, cfg=cfg, backbone=backbone
    )

    out = Path(args.out)
    _write_rgb(out, result.final_frame)

    feature = result.intermediates["feature"]
    manifest = {
        "tool": "adrelight",
        "version": __version__,
        "config": cfg.to_dict(),
        "preset": args.preset,
        "variant": args.variant,
        "backbone": backbone.describe(),
        "inputs": _digest_inputs(
            {
                "frame": args.frame,
                "banner": args.banner,
                "mask": args.mask,
                "quad": args.quad,
                "texture": args.texture,
                "config": args.config,
            }
        ),
        "output": str(out),
        "shadow_threshold": result.intermediates["shadow_threshold"],
        "feature_stats": _feature_stats_dict(feature.stats),
    }
    _write_json(out.with_suffix(".manifest.json"), manifest)

    if args.dump_intermediates:
        _dump_intermediates(Path(args.dump_intermediates), result, cfg)

    print(f"wrote {out}")
    return EXIT_OK


def _dump_intermediates(dump_dir: Path, result, cfg: PipelineConfig) -> None:
    inter = result.intermediates
    for name in (
        "region",
        "banner_resized",
        "banner_textured",
        "banner_aligned",
        "masked_background",
        "probe_card",
        "probe_background",
        "relit_raw",
    ):
        if name in inter:
            _write_rgb(dump_dir / f"{name}.png", inter[name])
    _write_rgb(dump_dir / "relit_banner.png", result.relit_banner)
    _write_rgb(dump_dir / "final_frame.png", result.final_frame)

    feature = inter["feature"]
    _write_rgb(dump_dir / "feature_normalized.png", feature.normalized)
    _write_gray(dump_dir / "gradient.png", inter["gradient"].data)
    _write_gray(dump_dir / "shadow_factor.png", inter["shadow_factor"].data)
    # Structure quotients live in [0, 4]; scale down for the 8-bit dump.
    for name in ("region_decomposition", "banner_decomposition"):
        if name in inter:
            prefix = name.split("_")[0]
            _write_gray(dump_dir / f"{prefix}_shading.png", inter[name].shading.data)
            _write_gray(dump_dir / f"{prefix}_structure.png", inter[name].structure.data / 4.0)

    _write_json(
        dump_dir / "intermediates.json",
        {
            "config": cfg.to_dict(),
            "shadow_threshold": inter["shadow_threshold"],
            "feature_stats": _feature_stats_dict(feature.stats),
            "structure_png_scale": 4.0,
            "timings": result.timings,
        },
    )


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def _parse_albedo(node, width: int, height: int) -> RgbImage:
    kind = node.get("type")
    if kind == "constant":
        value = node.get("value")
        if isinstance(value, (int, float)):
            value = [value, value, value]
        if not isinstance(value, list) or len(value) != 3:
            raise ValueError("constant albedo needs 'value' as a scalar or [r, g, b]")
        return RgbImage(np.full((height, width, 3), 0.0) + np.asarray(value, dtype=np.float64))
    if kind == "checker":
        tile = int(node.get("tile", 8))
        low = float(node.get("low", 0.3))
        high = float(node.get("high", 0.7))
        if tile < 1:
            raise ValueError(f"checker tile must be positive, got {tile}")
        ys, xs = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        plane = np.where(((xs // tile) + (ys // tile)) % 2 == 0, low, high)
        return RgbImage(np.repeat(plane[:, :, None], 3, axis=2))
    if kind == "file":
        return load_rgb(node["path"])
    raise ValueError(f"unknown albedo type {kind!r}, expected constant, checker, or file")


def _parse_scene(data: dict) -> tuple[SceneSpec, RegionQuad]:
    if not isinstance(data, dict):
        raise ValueError("scene spec must be a JSON object")
    try:
        width = int(data["width"])
        height = int(data["height"])
    except KeyError as exc:
        raise ValueError(f"scene spec is missing required key {exc}") from exc
    albedo = _parse_albedo(data.get("albedo", {"type": "constant", "value": 0.8}), width, height)
    lamps = []
    for i, node in enumerate(data.get("lamps", [])):
        try:
            lamps.append(
                Lamp(
                    center=(float(node["center"][0]), float(node["center"][1])),
                    radius=float(node["radius"]),
                    color=tuple(float(c) for c in node.get("color", [1.0, 1.0, 1.0])),
                    intensity=float(node["intensity"]),
                )
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ValueError(f"lamp {i} is malformed: {exc}") from exc
    spec = SceneSpec(
        width=width,
        height=height,
        base_albedo=albedo,
        lamps=tuple(lamps),
        gain=float(data.get("gain", 1.0)),
        blur_kernel=int(data.get("blur_kernel", 15)),
    )
    if "quad" in data:
        quad = RegionQuad(tuple((float(x), float(y)) for x, y in data["quad"]))
    else:
        mx = round(width / 6)
        my = round(height / 6)
        quad = RegionQuad(
            (
                (mx, my),
                (width - 1 - mx, my),
                (width - 1 - mx, height - 1 - my),
                (mx, height - 1 - my),
            )
        )
    return spec, quad


def cmd_synth(args) -> int:
    spec, quad = _parse_scene(_load_json(args.spec))
    out_dir = Path(args.out)

    _write_rgb(out_dir / "frame.png", render_scene(spec))
    _write_gray(out_dir / "mask.png", rasterize_quad(quad, spec.width, spec.height).data)
    _write_json(out_dir / "quad.json", {"corners": [list(c) for c in quad.corners]})
    for i in range(len(spec.lamps)):
        keep_only_i = frozenset(j for j in range(len(spec.lamps)) if j != i)
        light = render_illumination(spec, drop=keep_only_i)
        _write_rgb(out_dir / f"lamp_{i}.png", RgbImage(np.clip(light, 0.0, 1.0)))
    _write_json(
        out_dir / "spec.json",
        {
            "width": spec.width,
            "height": spec.height,
            "gain": spec.gain,
            "blur_kernel": spec.blur_kernel,
            "lamps": [
                {
                    "center": list(l.center),
                    "radius": l.radius,
                    "color": list(l.color),
                    "intensity": l.intensity,
                }
                for l in spec.lamps
            ],
            "quad": [list(c) for c in quad.corners],
        },
    )
    print(f"wrote scene to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# probe
# ---------------------------------------------------------------------------

def cmd_probe(args) -> int:
    frame = load_rgb(args.frame)
    mask = load_mask(args.mask)
    cfg = _resolve_config(args)
    backbone = _build_backbone(cfg, args)

    banner = load_rgb(args.banner) if args.banner else None
    b_full, b_masked = build_probe_pair(frame, mask)
    card = make_probe_card(frame.width, frame.height, cfg.probe_mode, banner=banner)
    feature = differential_feature(backbone, b_full, b_masked, card)

    out_dir = Path(args.out_dir)
    _atomic_bytes(out_dir / "epsilon.f32", feature.residual.astype("<f4").tobytes())
    _write_rgb(out_dir / "epsilon.png", feature.normalized)
    _write_json(
        out_dir / "stats.json",
        {
            "shape": list(feature.residual.shape),
            "dtype": "<f4",
            "stats": _feature_stats_dict(feature.stats),
            "max_abs": feature.max_abs,
            "probe_mode": cfg.probe_mode,
            "backbone": backbone.describe(),
            "version": __version__,
        },
    )
    print(f"wrote probe feature to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _eval_one(index: int, case: dict) -> tuple[str, float, float]:
    for key in ("frame", "mask", "quad", "relit"):
        if key not in case:
            raise ValueError(f"case {index} is missing required key '{key}'")
    frame = load_rgb(case["frame"])
    mask = load_mask(case["mask"])
    quad = _load_quad(case["quad"])
    relit = load_rgb(case["relit"])
    s, i = evaluate_case(frame, mask, quad, relit)
    return str(case.get("id", f"case-{index:03d}")), s, i


def cmd_eval(args) -> int:
    cases = _load_json(args.cases)
    if not isinstance(cases, list):
        raise ValueError(f"case file {args.cases} must hold a JSON list")
    if not cases:
        raise ValueError(f"case file {args.cases} lists no cases")

    with ThreadPoolExecutor(max_workers=min(args.workers, len(cases))) as pool:
        results = list(pool.map(_eval_one, range(len(cases)), cases))

    report = build_report(results, config={"cases": str(args.cases)})
    out_dir = Path(args.out_dir)
    _write_json(out_dir / "report.json", report.to_dict())
    table = format_table(report)
    _atomic_bytes(out_dir / "report.txt", table.encode("utf-8"))
    print(table, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly and entry point
# ---------------------------------------------------------------------------

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline configuration")
    group.add_argument("--config", help="JSON config file with PipelineConfig keys")
    group.add_argument("--preset", choices=PRESETS, help="shipped configuration preset")
    group.add_argument(
        "--variant",
        type=str.lower,
        choices=sorted(VARIANTS),
        help="ablation variant override",
    )
    for flag, key, typ in _CONFIG_FLAGS:
        group.add_argument(flag, dest=key, type=typ, default=None)
    group.add_argument("--probe-mode", dest="probe_mode", choices=("gray", "banner"), default=None)
    group.add_argument(
        "--shade-align",
        dest="shade_align",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="enable/disable shading transfer onto the banner",
    )

    backbone = parser.add_argument_group("backbone selection")
    backbone.add_argument(
        "--backbone", dest="backbone", choices=("synthetic", "identity", "remote"), default=None
    )
    backbone.add_argument("--backbone-url", help=f"remote endpoint (default ${ENV_BACKBONE_URL})")
    backbone.add_argument("--gain", type=float, default=1.0, help="synthetic backbone gain")
    backbone.add_argument(
        "--backbone-blur", type=int, default=15, help="synthetic backbone blur kernel"
    )
    backbone.add_argument("--timeout", type=float, default=10.0, help="remote timeout seconds")
    backbone.add_argument("--seed", type=int, default=0, help="remote sampler seed")
    backbone.add_argument("--steps", type=int, default=20, help="remote sampler steps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adrelight",
        description="Training-free banner relighting: shading transfer, "
        "differential light probing, and shadow-aware compositing.",
    )
    parser.add_argument("--version", action="version", version=f"adrelight {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("relight", help="run the full pipeline")
    p.add_argument("--frame", required=True, help="scene frame PNG")
    p.add_argument("--banner", required=True, help="banner PNG")
    p.add_argument("--mask", help="region mask PNG (frame-sized)")
    p.add_argument("--quad", help="placement quad JSON ({'corners': [[x,y] x4]})")
    p.add_argument("--texture", help="optional texture PNG blended onto the banner")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--dump-intermediates", help="directory for intermediate dumps")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_relight)

    p = sub.add_parser("synth", help="render a synthetic lamp-lit scene")
    p.add_argument("--spec", required=True, help="scene spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("probe", help="compute the differential light feature")
    p.add_argument("--frame", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--banner", help="banner PNG (required for banner probe mode)")
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_probe)

    p = sub.add_parser("eval", help="score relit frames")
    p.add_argument("--cases", required=True, help="JSON list of case file sets")
    p.add_argument("--out-dir", default=".", help="report directory")
    p.add_argument("--workers", type=int, default=8)
    p.set_defaults(handler=cmd_eval)

    return parser


def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, BackboneError):
        return EXIT_BACKBONE
    if isinstance(exc, GeometryError):
        return EXIT_GEOMETRY
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_USAGE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc.cause)
    except (BackboneError, GeometryError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
