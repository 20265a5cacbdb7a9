"""Kernel backend selection.

Imports the compiled `_kernels` extension when available, otherwise the
pure-numpy `_kernels_py` fallback. Set HDRCAL_PURE_PYTHON=1 to force the
fallback (useful for benchmarking and parity tests).
"""

import os

if os.environ.get("HDRCAL_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND

forward_kernel = kernels.forward_kernel
capture_kernel = kernels.capture_kernel
invert_kernel = kernels.invert_kernel
fuse_kernel = kernels.fuse_kernel
weighted_merge_kernel = kernels.weighted_merge_kernel
