"""Backend selection for the scan kernels.

The compiled extension is used when it imports; set ``PTOLEMYKIT_PURE=1``
to force the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("PTOLEMYKIT_PURE") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def get_backend(name: str | None = None):
    """Return the kernel module by name ("cython" or "python"); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _dense(D):
    return np.ascontiguousarray(D, dtype=np.float64)


def ptolemy_scan(D, floor, backend=None):
    return get_backend(backend).ptolemy_scan(_dense(D), float(floor))


def triangle_scan(D, floor, backend=None):
    return get_backend(backend).triangle_scan(_dense(D), float(floor))


def circle_scan(D, order, floor, backend=None):
    order = np.ascontiguousarray(order, dtype=np.intp)
    return get_backend(backend).circle_scan(_dense(D), order, float(floor))
