"""Convolution kernel backends.

Two interchangeable implementations of the 3D and 2D convolution primitives:
a pure-numpy one built from shifted-slice matmuls and a numba loop-nest one.
The active backend is chosen by the RACNET_BACKEND environment variable
("auto", "numpy" or "numba"; default "auto" prefers numba when importable)
and can be switched at runtime with set_backend().
"""

from __future__ import annotations

import os

from ..errors import ValidationError
from . import numpy_impl

BACKENDS = ("auto", "numpy", "numba")

_impl = None
_name = None


def _load(name: str):
    if name == "numpy":
        return numpy_impl, "numpy"
    if name == "numba":
        from . import numba_impl  # deferred: numba is an optional dependency
        return numba_impl, "numba"
    if name == "auto":
        try:
            from . import numba_impl
            return numba_impl, "numba"
        except ImportError:
            return numpy_impl, "numpy"
    raise ValidationError(f"RACNET_BACKEND must be one of {BACKENDS}, got {name!r}")


def set_backend(name: str) -> str:
    """Select the kernel backend; returns the resolved implementation name."""
    global _impl, _name
    _impl, _name = _load(name)
    return _name


def current_backend() -> str:
    """Name of the implementation in use ("numpy" or "numba")."""
    if _impl is None:
        set_backend(os.environ.get("RACNET_BACKEND", "auto"))
    return _name


def get_kernels():
    """The active implementation module."""
    if _impl is None:
        set_backend(os.environ.get("RACNET_BACKEND", "auto"))
    return _impl


def conv3d_forward(x, w, b):
    return get_kernels().conv3d_forward(x, w, b)


def conv3d_backward(x, w, gy):
    return get_kernels().conv3d_backward(x, w, gy)


def conv2d_forward(x, w, b):
    return get_kernels().conv2d_forward(x, w, b)


def conv2d_backward(x, w, gy):
    return get_kernels().conv2d_backward(x, w, gy)
