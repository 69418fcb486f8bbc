"""Kernel backend selection.

The hot geometry kernels exist twice: a compiled Cython extension
(``_fastcore``) and a pure NumPy fallback (``pure``).  The compiled one is
picked at import when it is built; setting the environment variable
``BOXEVAL_PURE=1`` forces the fallback (useful for benchmarking and
debugging).  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

from . import pure

_active = pure

if os.environ.get("BOXEVAL_PURE", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _fastcore

        _active = _fastcore
    except ImportError:
        pass


def backend():
    """The module implementing the active kernel backend."""
    return _active


def backend_name() -> str:
    return _active.BACKEND_NAME


def available_backends() -> dict:
    """Name -> module for every importable backend."""
    found = {"pure": pure}
    try:
        from . import _fastcore

        found["compiled"] = _fastcore
    except ImportError:
        pass
    return found
