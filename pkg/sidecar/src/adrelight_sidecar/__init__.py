"""HTTP sidecar for the banner-relighting pipeline.

Serves three model endpoints over a JSON + base64-PNG wire protocol:
POST /relight (background-conditioned relighting), POST /segment (prompted
region masks), and POST /texture (prompt-driven texture generation), plus
GET /health. Echo mode replaces every model with a deterministic stand-in
so clients can integration-test the protocol without checkpoints.
"""

from .app import create_app
from .config import RUNTIME_LOADERS, ServiceConfig, ServiceRuntimes, build_runtimes

__version__ = "0.1.0"

__all__ = [
    "RUNTIME_LOADERS",
    "ServiceConfig",
    "ServiceRuntimes",
    "build_runtimes",
    "create_app",
    "__version__",
]
