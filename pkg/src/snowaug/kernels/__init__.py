"""Convolution kernels with a compiled (Cython) core and a numpy fallback.

The backend is picked once at import time; ``BACKEND`` reports which one is
active. Both backends share a single contract:

- mirror padding at borders (edge sample not repeated),
- float64 in, float64 out, output dimensions equal input dimensions,
- kernels are applied centered (odd side lengths only).

``bench/benchmark_kernels.py`` compares the two backends head to head.
"""

from __future__ import annotations

import numpy as np

try:
    from . import _convcy as _impl

    BACKEND = "cython"
except ImportError:  # extension not built; pure-numpy path
    from . import _convnp as _impl

    BACKEND = "numpy"

from . import _convnp

__all__ = ["BACKEND", "sepconv2d_reflect", "conv2d_reflect", "get_backend_module"]


def get_backend_module(name=None):
    """Backend module by name ('cython' or 'numpy'); default is the active one."""
    if name is None:
        return _impl
    if name == "numpy":
        return _convnp
    if name == "cython":
        if BACKEND != "cython":
            raise RuntimeError("compiled backend is not available")
        return _impl
    raise ValueError(f"unknown backend {name!r}")


def _check_field(field, pad_y, pad_x):
    field = np.ascontiguousarray(field, dtype=np.float64)
    if field.ndim != 2 or field.size == 0:
        raise ValueError("expected a non-empty 2-D field")
    if pad_y >= field.shape[0] or pad_x >= field.shape[1]:
        raise ValueError(
            f"kernel radius ({pad_y}, {pad_x}) too large for field "
            f"of shape {field.shape} with mirror padding"
        )
    return field


def sepconv2d_reflect(field, taps, backend=None):
    """Separable 2-D filtering with a symmetric 1-D kernel (odd length)."""
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    if taps.ndim != 1 or taps.shape[0] % 2 == 0:
        raise ValueError("1-D kernel must have odd length")
    r = taps.shape[0] // 2
    field = _check_field(field, r, r)
    return get_backend_module(backend).sepconv2d(field, taps)


def conv2d_reflect(field, kernel, backend=None):
    """Dense 2-D filtering with a centered odd-sided kernel.

    Zero kernel weights are skipped, so sparse kernels (e.g. rotated motion
    lines) cost proportionally to their nonzero count.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValueError("2-D kernel must have odd side lengths")
    ry = kernel.shape[0] // 2
    rx = kernel.shape[1] // 2
    field = _check_field(field, ry, rx)
    ys, xs = np.nonzero(kernel)
    if ys.size == 0:
        return np.zeros_like(field)
    dys = np.ascontiguousarray(ys - ry, dtype=np.int64)
    dxs = np.ascontiguousarray(xs - rx, dtype=np.int64)
    ws = np.ascontiguousarray(kernel[ys, xs], dtype=np.float64)
    return get_backend_module(backend).corr_taps(field, dys, dxs, ws, ry, rx)
