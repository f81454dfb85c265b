"""Kernel backend selection.

The compiled extension is used when it imports; otherwise (or when
``GEODESOLVE_PURE=1``) the numpy fallback is used. Both expose the same
functions with the same signatures.
"""
import os

from . import _fallback

if os.environ.get("GEODESOLVE_PURE"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _ext as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

jacobi_eigh = _impl.jacobi_eigh
edge_diff_sq = _impl.edge_diff_sq
quartic_fg = _impl.quartic_fg

BACKENDS = {"python": _fallback}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl
