"""Kernel dispatch: use the compiled extension when it was built.

Set ``IRSWARM_PURE_PYTHON=1`` to force the fallback (handy for benchmarks
and for checking that both backends agree).
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("IRSWARM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

splitmix64 = _impl.splitmix64
cast_rays = _impl.cast_rays
channel_match = _impl.channel_match


def compiled_module():
    """Return the compiled module, or None if it is not available."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
