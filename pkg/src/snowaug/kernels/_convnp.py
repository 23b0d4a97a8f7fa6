"""Pure-numpy convolution backend (fallback when the compiled core is absent).

Both routines use mirror padding (edge sample not repeated) and operate on
contiguous float64 arrays. ``corr_taps`` is the sparse-tap form: only the
nonzero kernel weights are passed, as parallel (dy, dx, w) arrays.
"""

import numpy as np


def sepconv2d(field, taps):
    """Separable filtering: horizontal pass then vertical pass with the same
    symmetric odd-length 1-D kernel."""
    r = taps.shape[0] // 2
    h, w = field.shape
    out = field
    if r > 0:
        padded = np.pad(out, ((0, 0), (r, r)), mode="reflect")
        out = np.zeros((h, w), dtype=np.float64)
        for i in range(taps.shape[0]):
            out += taps[i] * padded[:, i : i + w]
        padded = np.pad(out, ((r, r), (0, 0)), mode="reflect")
        out = np.zeros((h, w), dtype=np.float64)
        for i in range(taps.shape[0]):
            out += taps[i] * padded[i : i + h, :]
    else:
        out = field * taps[0]
    return out


def corr_taps(field, dys, dxs, ws, ry, rx):
    """Dense 2-D filtering expressed over the kernel's nonzero taps."""
    h, w = field.shape
    padded = np.pad(field, ((ry, ry), (rx, rx)), mode="reflect")
    out = np.zeros((h, w), dtype=np.float64)
    for dy, dx, wt in zip(dys, dxs, ws):
        oy = ry + dy
        ox = rx + dx
        out += wt * padded[oy : oy + h, ox : ox + w]
    return out
