"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise (or when the
``QRELEVANCE_PURE_PYTHON`` environment variable is set) the numpy fallback
with the identical contract is used.
"""
from __future__ import annotations

import os

from . import _volterra_py

BACKEND = "python"
volterra_midpoint = _volterra_py.volterra_midpoint

if not os.environ.get("QRELEVANCE_PURE_PYTHON"):
    try:
        from ._volterra import volterra_midpoint  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

__all__ = ["BACKEND", "volterra_midpoint"]
