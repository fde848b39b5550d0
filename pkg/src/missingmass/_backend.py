"""Select the kernel implementation at import time.

The compiled ``_kernels`` extension is used when it was built; otherwise,
or when ``MISSINGMASS_PURE_PYTHON`` is set to a non-empty value, the
pure-Python module takes over.  Both expose the same functions.
"""

import os

from . import _kernels_py

if os.environ.get("MISSINGMASS_PURE_PYTHON"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND

__all__ = ["BACKEND", "kernels"]
