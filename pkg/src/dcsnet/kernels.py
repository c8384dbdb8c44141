"""Backend selection for the hot loops.

The compiled module is used when it imports; set ``DCSNET_PURE_PYTHON=1`` to force the
NumPy fallback.  ``BACKEND`` names the active choice.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("DCSNET_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def line_consensus(W, radius, xi, iterations, backend=None):
    """Apply ``iterations`` consensus steps with P = I - xi*L on the radius-``radius`` line.

    ``W`` is (n, m) or (batch, n, m); the result has the same shape.
    """
    impl = _select(backend)
    W = np.ascontiguousarray(W, dtype=np.float64)
    squeeze = W.ndim == 2
    if squeeze:
        W = W[None]
    out = impl.line_consensus(W, int(radius), float(xi), int(iterations))
    return out[0] if squeeze else out


def soft_threshold(z, kappa, backend=None):
    """Shrink each complex entry's magnitude by ``kappa``, keeping its phase."""
    impl = _select(backend)
    return impl.soft_threshold(np.ascontiguousarray(z, dtype=np.complex128), float(kappa))


def available_backends():
    names = ["python"]
    if _impl is not _kernels_py or _compiled() is not None:
        names.insert(0, "cython")
    return names


def _compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        mod = _compiled()
        if mod is None:
            raise RuntimeError("compiled kernels are not built")
        return mod
    raise ValueError(f"unknown backend {backend!r}")
