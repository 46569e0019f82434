"""Backend selection for the hot loops.

The Cython extension is used when it was built; otherwise, or when
``NMMB_BACKEND=python`` is set, the numpy twins take over.
"""
import os

from . import _pykernels

_forced = os.environ.get("NMMB_BACKEND", "").lower()

if _forced == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _pykernels
        BACKEND = "python"

BACKENDS = {"python": _pykernels}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl

sturm_counts = _impl.sturm_counts
inverse_iteration = _impl.inverse_iteration
tridiagonal_eigenvalues = _impl.tridiagonal_eigenvalues
