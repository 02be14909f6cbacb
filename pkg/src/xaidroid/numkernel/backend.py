"""Kernel backend selection.

Two interchangeable implementations of the hot kernels exist: the numpy
reference (_kernels_py) and a compiled extension (_kernels_c). The env var
XAIDROID_KERNEL picks one at import time ("py", "c", or "auto" to prefer
the extension when built); set_backend switches at runtime, which the
cross-checking tests and the benchmark rely on.
"""

from __future__ import annotations

import importlib
import os

from ..errors import UsageError

_CHOICES = ("auto", "py", "c")
_active_name = None
_active_module = None


def _load(name: str):
    if name == "py":
        return "py", importlib.import_module("xaidroid.numkernel._kernels_py")
    if name == "c":
        return "c", importlib.import_module("xaidroid.numkernel._kernels_c")
    try:
        return "c", importlib.import_module("xaidroid.numkernel._kernels_c")
    except ImportError:
        return "py", importlib.import_module("xaidroid.numkernel._kernels_py")


def _ensure_loaded():
    global _active_name, _active_module
    if _active_module is None:
        requested = os.environ.get("XAIDROID_KERNEL", "auto").lower()
        if requested not in _CHOICES:
            raise UsageError(
                f"XAIDROID_KERNEL must be one of {', '.join(_CHOICES)}, got {requested!r}"
            )
        _active_name, _active_module = _load(requested)


def backend_name() -> str:
    """Name of the active kernel backend, "py" or "c"."""
    _ensure_loaded()
    return _active_name


def kernels():
    """Module object holding the active hot-kernel implementations."""
    _ensure_loaded()
    return _active_module


def set_backend(name: str) -> str:
    """Force a specific backend; returns the previously active name."""
    global _active_name, _active_module
    if name not in ("py", "c"):
        raise UsageError(f"backend must be 'py' or 'c', got {name!r}")
    _ensure_loaded()
    previous = _active_name
    try:
        _active_name, _active_module = _load(name)
    except ImportError as exc:
        raise UsageError(f"kernel backend {name!r} is not available: {exc}") from exc
    return previous
