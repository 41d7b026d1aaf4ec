"""Hot-loop kernels, compiled when the Cython extension is built.

Set ``NPTMARK_PURE_PYTHON=1`` to force the pure-Python implementations.
``BACKEND`` names the implementation that was selected at import.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("NPTMARK_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback

BACKEND = "cython" if _impl is not _fallback else "python"


def block_sq_distances(host, block, stride=1):
    """Squared Frobenius distance between ``block`` and every host window.

    Window offsets are ``(a*stride, b*stride)``; entry ``[a, b]`` of the
    result belongs to that offset.
    """
    host = np.ascontiguousarray(host, dtype=np.float64)
    block = np.ascontiguousarray(block, dtype=np.float64)
    return _impl.block_sq_distances(host, block, int(stride))


def largest_true_rectangle(mask):
    """(top, left, height, width) of the largest all-True axis-aligned rectangle.

    Ties go to the smallest (top, left).  An all-False mask gives zeros.
    """
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    return _impl.largest_true_rectangle(mask)
