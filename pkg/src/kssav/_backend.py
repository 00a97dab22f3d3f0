"""Select the kernel backend at import time.

The compiled extension is preferred. Set ``KSSAV_PURE_PYTHON=1`` to force
the NumPy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("KSSAV_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND
