# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled convolution backend; same contract as _convnp."""

import numpy as np

cimport numpy as cnp


cdef inline Py_ssize_t _reflect(Py_ssize_t i, Py_ssize_t n) nogil:
    # Mirror without repeating the edge sample: -1 -> 1, n -> n - 2.
    if i < 0:
        i = -i
    if i >= n:
        i = 2 * n - 2 - i
    return i


cdef _pad_reflect(double[:, ::1] field, Py_ssize_t ry, Py_ssize_t rx):
    cdef Py_ssize_t h = field.shape[0]
    cdef Py_ssize_t w = field.shape[1]
    padded_arr = np.empty((h + 2 * ry, w + 2 * rx), dtype=np.float64)
    cdef double[:, ::1] p = padded_arr
    cdef Py_ssize_t y, x, sy
    with nogil:
        for y in range(h + 2 * ry):
            sy = _reflect(y - ry, h)
            for x in range(rx):
                p[y, x] = field[sy, _reflect(x - rx, w)]
            for x in range(w):
                p[y, rx + x] = field[sy, x]
            for x in range(rx):
                p[y, rx + w + x] = field[sy, _reflect(w + x, w)]
    return padded_arr


def sepconv2d(double[:, ::1] field, double[::1] taps):
    cdef Py_ssize_t h = field.shape[0]
    cdef Py_ssize_t w = field.shape[1]
    cdef Py_ssize_t n = taps.shape[0]
    cdef Py_ssize_t r = n // 2
    if r == 0:
        return np.asarray(field) * taps[0]

    padded_x = _pad_reflect(field, 0, r)
    mid_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] px = padded_x
    cdef double[:, ::1] mid = mid_arr
    cdef Py_ssize_t y, x, i
    cdef double acc
    with nogil:
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for i in range(n):
                    acc += taps[i] * px[y, x + i]
                mid[y, x] = acc

    padded_y = _pad_reflect(mid, r, 0)
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] py = padded_y
    cdef double[:, ::1] out = out_arr
    cdef double t
    with nogil:
        # Tap-outer order keeps every inner sweep contiguous.
        for i in range(n):
            t = taps[i]
            for y in range(h):
                for x in range(w):
                    out[y, x] += t * py[y + i, x]
    return out_arr


def corr_taps(double[:, ::1] field, long[::1] dys, long[::1] dxs,
              double[::1] ws, Py_ssize_t ry, Py_ssize_t rx):
    cdef Py_ssize_t h = field.shape[0]
    cdef Py_ssize_t w = field.shape[1]
    cdef Py_ssize_t n = ws.shape[0]
    padded_arr = _pad_reflect(field, ry, rx)
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] padded = padded_arr
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, y, x, oy, ox
    cdef double wt
    with nogil:
        for t in range(n):
            wt = ws[t]
            oy = ry + dys[t]
            ox = rx + dxs[t]
            for y in range(h):
                for x in range(w):
                    out[y, x] += wt * padded[y + oy, x + ox]
    return out_arr
