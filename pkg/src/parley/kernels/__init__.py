"""Hot loops, compiled when the extension is available.

Set ``PARLEY_PURE_PYTHON=1`` to force the NumPy fallback.
"""

import os

from . import _fallback as fallback

try:
    if os.environ.get("PARLEY_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _hals as compiled
except ImportError:
    compiled = None

_impl = compiled if compiled is not None else fallback
BACKEND = "cython" if compiled is not None else "python"

hals_update = _impl.hals_update
running_mean = _impl.running_mean

__all__ = ["BACKEND", "compiled", "fallback", "hals_update", "running_mean"]
