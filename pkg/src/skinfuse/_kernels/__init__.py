"""Kernel backend selection.

The compiled extension (``skinfuse._kernels._native``) is preferred when it
imported cleanly; otherwise the numpy implementation is used. Set
``SKINFUSE_KERNELS=numpy`` or ``SKINFUSE_KERNELS=native`` to force a backend
(forcing ``native`` raises if the extension is missing).

Both backends implement the same five hot kernels and are expected to agree
mask-for-mask; ``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

import numpy as np

from . import _numpy

_requested = os.environ.get("SKINFUSE_KERNELS", "").strip().lower()
if _requested not in ("", "native", "numpy"):
    raise ImportError(
        f"SKINFUSE_KERNELS must be 'native' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        if _requested == "native":
            raise
        _impl = _numpy
        BACKEND = "numpy"


def backend_name():
    """Name of the active backend: 'native' or 'numpy'."""
    return BACKEND


def sobel_magnitude(gray):
    return _impl.sobel_magnitude(np.ascontiguousarray(gray, dtype=np.uint8))


def dilate(mask, radius, iterations):
    out = _impl.dilate(
        np.ascontiguousarray(mask, dtype=np.uint8), int(radius), int(iterations)
    )
    return np.asarray(out, dtype=bool)


def hist2d(a, b, lo_a, hi_a, lo_b, hi_b, na, nb):
    return _impl.hist2d(
        np.ascontiguousarray(a, dtype=np.float64).ravel(),
        np.ascontiguousarray(b, dtype=np.float64).ravel(),
        float(lo_a), float(hi_a), float(lo_b), float(hi_b), int(na), int(nb),
    )


def hist_classify(a, b, counts, lo_a, hi_a, lo_b, hi_b, threshold):
    return _impl.hist_classify(
        np.ascontiguousarray(a, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        np.ascontiguousarray(counts, dtype=np.float64),
        float(lo_a), float(hi_a), float(lo_b), float(hi_b), float(threshold),
    )


def gauss_classify(a, b, mu_a, mu_b, sx, sy, exact_ellipse):
    return _impl.gauss_classify(
        np.ascontiguousarray(a, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        float(mu_a), float(mu_b), float(sx), float(sy), bool(exact_ellipse),
    )
