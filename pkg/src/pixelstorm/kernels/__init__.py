"""Forward-kernel backends: compiled core when built, numpy otherwise.

Selection happens once at import. ``PIXELSTORM_BACKEND=numpy|cython`` forces
a specific backend (the benchmark and the parity tests use this).
"""

from __future__ import annotations

import os

from . import numpy_backend

try:
    from . import cython_backend
except ImportError:
    cython_backend = None


def available_backends() -> dict:
    backends = {"numpy": numpy_backend}
    if cython_backend is not None:
        backends["cython"] = cython_backend
    return backends


def get_backend(name: str | None = None):
    """Resolve a backend by name, env override, or preference for the compiled one."""
    backends = available_backends()
    if name is None:
        name = os.environ.get("PIXELSTORM_BACKEND")
    if name is None:
        return backends.get("cython", numpy_backend)
    try:
        return backends[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {sorted(backends)}"
        ) from None


DEFAULT_BACKEND = get_backend()
