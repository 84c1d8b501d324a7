"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback takes over. :func:`use_backend` switches explicitly (tests and the
benchmark use it to compare the two).
"""

from __future__ import annotations

import logging
from types import ModuleType

from gasleak import _fallback

log = logging.getLogger(__name__)

try:
    from gasleak import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
    log.debug("compiled kernels unavailable; using numpy fallback")

backend: ModuleType = _compiled if _compiled is not None else _fallback


def compiled_available() -> bool:
    return _compiled is not None


def use_backend(name: str) -> ModuleType:
    """Select ``"cython"`` or ``"python"`` kernels; returns the previous backend."""
    global backend
    previous = backend
    if name == "python":
        backend = _fallback
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        backend = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def get(name: str | None = None) -> ModuleType:
    if name is None:
        return backend
    if name == "python":
        return _fallback
    if name == "cython" and _compiled is not None:
        return _compiled
    raise RuntimeError(f"backend {name!r} unavailable")
