"""Collaborative video-chunk caching and transcoding simulator for edge clusters.

The cache/policy/routing kernels (the per-event hot path) ship as optional
C extensions compiled from their own .py sources; when the extensions are
absent the interpreted modules load instead, with identical behavior. Set
CHUNKEDGE_PURE=1 before the first import to force the interpreted kernels.
"""

import os

__version__ = "0.1.0"

HOT_MODULES = ("cache_core", "policies", "routing")

if os.environ.get("CHUNKEDGE_PURE") == "1":
    from ._pyload import load_pure_modules

    load_pure_modules(HOT_MODULES)


def kernel_mode() -> str:
    """Return 'compiled' when the hot kernels run as C extensions, else 'pure'."""
    from . import cache_core

    return "pure" if cache_core.__file__.endswith(".py") else "compiled"
