"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is loaded.  Setting ``FINSLERWARP_PURE_PYTHON=1`` forces the
fallback even when the extension is present.
"""
import os

from . import _jetcore_py

python_backend = _jetcore_py

compiled_backend = None
if os.environ.get("FINSLERWARP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _jetcore as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

active = compiled_backend if compiled_backend is not None else python_backend

BACKEND = active.BACKEND
mul = active.mul
div = active.div
compose = active.compose

__all__ = ["BACKEND", "mul", "div", "compose", "python_backend", "compiled_backend"]
