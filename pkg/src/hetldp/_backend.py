"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
NumPy implementation in ``_kernels_py`` takes over. Setting
``HETLDP_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("HETLDP_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND
