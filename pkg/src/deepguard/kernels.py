"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``DEEPGUARD_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("DEEPGUARD_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

mean_sq_diff = _impl.mean_sq_diff
ar_normal_solve = _impl.ar_normal_solve
ar_iterate = _impl.ar_iterate
gamma_p = _impl.gamma_p
box_blur = _impl.box_blur
paint_rows = _impl.paint_rows

__all__ = [
    "BACKEND",
    "mean_sq_diff",
    "ar_normal_solve",
    "ar_iterate",
    "gamma_p",
    "box_blur",
    "paint_rows",
]
