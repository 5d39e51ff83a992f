"""Kernel backend selection.

Two interchangeable backends provide the hot numeric kernels: a compiled
Cython extension (``_native``) and a pure-numpy fallback (``_numpy``).
Both follow identical accumulation orders, so their outputs are
bit-identical.  Selection happens once at import time:

    LESIONFUSE_KERNELS=auto    use native when importable, else numpy (default)
    LESIONFUSE_KERNELS=native  require the compiled extension
    LESIONFUSE_KERNELS=numpy   force the fallback

``BACKEND`` names the backend in use.
"""

import os

from lesionfuse._kernels import _numpy

_choice = os.environ.get("LESIONFUSE_KERNELS", "auto").strip().lower()
if _choice not in ("auto", "native", "numpy"):
    raise ImportError(
        f"LESIONFUSE_KERNELS must be auto, native or numpy, got {_choice!r}"
    )

_impl = None
if _choice in ("auto", "native"):
    try:
        from lesionfuse._kernels import _native as _impl
    except ImportError:
        if _choice == "native":
            raise ImportError(
                "LESIONFUSE_KERNELS=native but the compiled extension "
                "lesionfuse._kernels._native is not importable"
            )
if _impl is None:
    _impl = _numpy

BACKEND = "native" if _impl is not _numpy else "numpy"

glcm_counts = _impl.glcm_counts
lbp_counts = _impl.lbp_counts
convolve_valid = _impl.convolve_valid
gini_scores = _impl.gini_scores
split_scan = _impl.split_scan
tree_apply = _impl.tree_apply

__all__ = [
    "BACKEND",
    "glcm_counts",
    "lbp_counts",
    "convolve_valid",
    "gini_scores",
    "split_scan",
    "tree_apply",
]
