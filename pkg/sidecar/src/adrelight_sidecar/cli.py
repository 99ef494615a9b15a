"""Command-line entry point: configure and run the sidecar under uvicorn.

Exit codes: 0 clean shutdown, 2 invalid configuration or missing models.
"""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import create_app
from .config import DEFAULT_MAX_SIDE, ServiceConfig, build_runtimes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adrelight-sidecar",
        description="HTTP sidecar serving relight/segment/texture model endpoints.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8787)
    parser.add_argument(
        "--echo",
        action="store_true",
        help="serve deterministic stand-in runtimes instead of model checkpoints",
    )
    parser.add_argument("--relight-checkpoint", help="required unless --echo is set")
    parser.add_argument("--segment-checkpoint")
    parser.add_argument("--texture-checkpoint")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-side", type=int, default=DEFAULT_MAX_SIDE)
    parser.add_argument("--seed", type=int, default=0, help="default sampler seed")
    parser.add_argument("--steps", type=int, default=20, help="default sampler steps")
    parser.add_argument("--log-level", default="info")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ServiceConfig(
            host=args.host,
            port=args.port,
            echo=args.echo,
            relight_checkpoint=args.relight_checkpoint,
            segment_checkpoint=args.segment_checkpoint,
            texture_checkpoint=args.texture_checkpoint,
            device=args.device,
            max_side=args.max_side,
            default_seed=args.seed,
            default_steps=args.steps,
        )
        app = create_app(config, build_runtimes(config))
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    uvicorn.run(app, host=config.host, port=config.port, log_level=args.log_level)
    return 0


if __name__ == "__main__":
    sys.exit(main())
