"""Pure numpy/scipy implementations of the per-pixel kernels.

This is the fallback backend used when the compiled extension is not
available. Arithmetic is kept expression-for-expression identical to the
native backend so both produce the same masks on the same inputs: integer
Sobel taps, ``sqrt(x*x + y*y)`` magnitudes, ``floor(v + 0.5)`` rounding and
``floor((v - lo) * n / (hi - lo))`` binning.
"""

import numpy as np
from scipy import ndimage


def sobel_magnitude(gray):
    """Gradient magnitude of a uint8 image, scaled by 1/8 into uint8.

    Border pixels see a replicated edge. Caller guarantees height and
    width >= 3.
    """
    p = np.pad(gray.astype(np.int64), 1, mode="edge")
    right = p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]
    left = p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2]
    bottom = p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]
    top = p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:]
    gx = (right - left).astype(np.float64)
    gy = (bottom - top).astype(np.float64)
    mag = np.floor(np.sqrt(gx * gx + gy * gy) * 0.125 + 0.5)
    return np.minimum(mag, 255.0).astype(np.uint8)


def dilate(mask, radius, iterations):
    """Binary dilation with a (2*radius+1)^2 square element.

    Out-of-bounds neighbours count as background.
    """
    if iterations == 0:
        return mask.copy()
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_dilation(
        mask, structure=structure, iterations=iterations, border_value=0
    )


def _bin_index(values, lo, hi, nbins):
    inv = nbins / (hi - lo)
    idx = np.floor((values - lo) * inv).astype(np.int64)
    # values exactly at (or within rounding of) the upper edge land in the
    # last bin
    np.clip(idx, None, nbins - 1, out=idx)
    return idx


def hist2d(a, b, lo_a, hi_a, lo_b, hi_b, na, nb):
    """Accumulate (a, b) pairs into an na x nb count matrix."""
    if np.any((a < lo_a) | (a > hi_a)) or np.any((b < lo_b) | (b > hi_b)):
        raise ValueError("feature value outside histogram range")
    ia = _bin_index(a, lo_a, hi_a, na)
    ib = _bin_index(b, lo_b, hi_b, nb)
    counts = np.zeros((na, nb), dtype=np.float64)
    np.add.at(counts, (ia, ib), 1.0)
    return counts


def hist_classify(a, b, counts, lo_a, hi_a, lo_b, hi_b, threshold):
    """True where the histogram cell holding (a, b) exceeds the threshold.

    Pixels outside the histogram range are always False.
    """
    na, nb = counts.shape
    in_range = (a >= lo_a) & (a <= hi_a) & (b >= lo_b) & (b <= hi_b)
    ia = _bin_index(np.where(in_range, a, lo_a), lo_a, hi_a, na)
    ib = _bin_index(np.where(in_range, b, lo_b), lo_b, hi_b, nb)
    return in_range & (counts[ia, ib] > threshold)


def gauss_classify(a, b, mu_a, mu_b, sx, sy, exact_ellipse):
    """Elliptical accept region around (mu_a, mu_b) with semi-axes sx, sy.

    The default boundary radius at angle tau is sqrt((sx*cos)^2 +
    (sy*sin)^2); with ``exact_ellipse`` it is the true radial distance to
    the ellipse. A pixel exactly at the centre is always accepted.
    """
    dx = a - mu_a
    dy = b - mu_b
    d = np.sqrt(dx * dx + dy * dy)
    tau = np.arctan2(dy, dx)
    ct = np.cos(tau)
    st = np.sin(tau)
    if exact_ellipse:
        boundary = sx * sy / np.sqrt(sy * sy * ct * ct + sx * sx * st * st)
    else:
        bx = sx * ct
        by = sy * st
        boundary = np.sqrt(bx * bx + by * by)
    return (boundary > d) | (d == 0.0)
