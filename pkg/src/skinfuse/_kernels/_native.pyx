# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the per-pixel kernels.

Mirrors _numpy.py operation for operation; see the note there about keeping
the floating-point expressions identical across backends.
"""

import numpy as np

from libc.math cimport atan2, cos, floor, sin, sqrt


def sobel_magnitude(const unsigned char[:, ::1] gray):
    cdef Py_ssize_t h = gray.shape[0]
    cdef Py_ssize_t w = gray.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, ym, yp, xm, xp
    cdef long gx, gy, right, left, bottom, top
    cdef double mag
    for y in range(h):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            right = gray[ym, xp] + 2 * gray[y, xp] + gray[yp, xp]
            left = gray[ym, xm] + 2 * gray[y, xm] + gray[yp, xm]
            bottom = gray[yp, xm] + 2 * gray[yp, x] + gray[yp, xp]
            top = gray[ym, xm] + 2 * gray[ym, x] + gray[ym, xp]
            gx = right - left
            gy = bottom - top
            mag = floor(sqrt(<double>(gx * gx + gy * gy)) * 0.125 + 0.5)
            out[y, x] = <unsigned char>(mag if mag < 255.0 else 255.0)
    return out_arr


cdef void _dilate_once(const unsigned char[:, ::1] src,
                       unsigned char[:, ::1] tmp,
                       unsigned char[:, ::1] dst,
                       Py_ssize_t radius) noexcept nogil:
    # square element = horizontal segment then vertical segment
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t y, x, k, lo, hi
    cdef unsigned char hit
    for y in range(h):
        for x in range(w):
            lo = x - radius if x - radius > 0 else 0
            hi = x + radius if x + radius < w - 1 else w - 1
            hit = 0
            for k in range(lo, hi + 1):
                if src[y, k]:
                    hit = 1
                    break
            tmp[y, x] = hit
    for y in range(h):
        lo = y - radius if y - radius > 0 else 0
        hi = y + radius if y + radius < h - 1 else h - 1
        for x in range(w):
            hit = 0
            for k in range(lo, hi + 1):
                if tmp[k, x]:
                    hit = 1
                    break
            dst[y, x] = hit


def dilate(mask, long radius, long iterations):
    cur = np.ascontiguousarray(mask, dtype=np.uint8)
    if iterations == 0:
        return cur.astype(bool)
    tmp = np.empty_like(cur)
    dst = np.empty_like(cur)
    cdef long it
    for it in range(iterations):
        _dilate_once(cur, tmp, dst, radius)
        cur, dst = dst, cur
    return cur.astype(bool)


cdef inline Py_ssize_t _bin_index(double v, double lo, double inv,
                                  Py_ssize_t nbins) noexcept nogil:
    cdef Py_ssize_t idx = <Py_ssize_t>floor((v - lo) * inv)
    if idx > nbins - 1:
        idx = nbins - 1
    return idx


def hist2d(const double[::1] a, const double[::1] b,
           double lo_a, double hi_a, double lo_b, double hi_b,
           Py_ssize_t na, Py_ssize_t nb):
    counts_arr = np.zeros((na, nb), dtype=np.float64)
    cdef double[:, ::1] counts = counts_arr
    cdef double inv_a = na / (hi_a - lo_a)
    cdef double inv_b = nb / (hi_b - lo_b)
    cdef Py_ssize_t i, n = a.shape[0]
    for i in range(n):
        if a[i] < lo_a or a[i] > hi_a or b[i] < lo_b or b[i] > hi_b:
            raise ValueError("feature value outside histogram range")
        counts[_bin_index(a[i], lo_a, inv_a, na),
               _bin_index(b[i], lo_b, inv_b, nb)] += 1.0
    return counts_arr


def hist_classify(const double[:, ::1] a, const double[:, ::1] b,
                  const double[:, ::1] counts,
                  double lo_a, double hi_a, double lo_b, double hi_b,
                  double threshold):
    cdef Py_ssize_t h = a.shape[0]
    cdef Py_ssize_t w = a.shape[1]
    cdef Py_ssize_t na = counts.shape[0]
    cdef Py_ssize_t nb = counts.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef double inv_a = na / (hi_a - lo_a)
    cdef double inv_b = nb / (hi_b - lo_b)
    cdef Py_ssize_t y, x
    cdef double va, vb
    with nogil:
        for y in range(h):
            for x in range(w):
                va = a[y, x]
                vb = b[y, x]
                if va < lo_a or va > hi_a or vb < lo_b or vb > hi_b:
                    continue
                if counts[_bin_index(va, lo_a, inv_a, na),
                          _bin_index(vb, lo_b, inv_b, nb)] > threshold:
                    out[y, x] = 1
    return out_arr.astype(bool)


def gauss_classify(const double[:, ::1] a, const double[:, ::1] b,
                   double mu_a, double mu_b, double sx, double sy,
                   bint exact_ellipse):
    cdef Py_ssize_t h = a.shape[0]
    cdef Py_ssize_t w = a.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef double dx, dy, d, tau, ct, st, bx, by, boundary
    with nogil:
        for y in range(h):
            for x in range(w):
                dx = a[y, x] - mu_a
                dy = b[y, x] - mu_b
                d = sqrt(dx * dx + dy * dy)
                if d == 0.0:
                    out[y, x] = 1
                    continue
                tau = atan2(dy, dx)
                ct = cos(tau)
                st = sin(tau)
                if exact_ellipse:
                    boundary = sx * sy / sqrt(sy * sy * ct * ct + sx * sx * st * st)
                else:
                    bx = sx * ct
                    by = sy * st
                    boundary = sqrt(bx * bx + by * by)
                if boundary > d:
                    out[y, x] = 1
    return out_arr.astype(bool)
