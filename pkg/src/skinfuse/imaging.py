"""Pixel containers, PNG I/O, Sobel gradient and binary dilation.

All images are 8-bit and immutable after construction: the wrapped numpy
arrays are marked read-only, so a container can be shared across threads.
PNG is the only supported file format. Masks are written bit-exactly as
single-channel 0/255 PNGs and read back with a >127 threshold so that
anti-aliased ground-truth files binarize sensibly.
"""

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import _kernels
from .exceptions import ImageDecodeError

__all__ = [
    "RgbImage",
    "GrayImage",
    "BinaryMask",
    "save_png",
    "load_png",
    "save_mask_png",
    "load_mask_png",
    "sobel_magnitude",
    "dilate",
    "rgb_to_luma",
]


def _freeze(data, dtype, shape_check, copy):
    arr = np.asarray(data, dtype=dtype)
    shape_check(arr)
    if copy:
        arr = arr.copy()
    elif not arr.flags.c_contiguous:
        arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


class _Raster:
    """Common surface of the three pixel containers."""

    def __init__(self, pixels, *, copy=True):
        self.pixels = _freeze(pixels, self._dtype, self._check_shape, copy)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def dims(self):
        """(width, height) tuple."""
        return (self.width, self.height)

    def __repr__(self):
        return f"{type(self).__name__}({self.width}x{self.height})"

    @classmethod
    def _wrap(cls, pixels):
        # internal fast path for freshly computed arrays (skips the copy)
        return cls(pixels, copy=False)


class RgbImage(_Raster):
    """8-bit RGB image, shape (height, width, 3)."""

    _dtype = np.uint8

    @staticmethod
    def _check_shape(arr):
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"RgbImage needs (h, w, 3) uint8 data, got {arr.shape}")


class GrayImage(_Raster):
    """8-bit grayscale image, shape (height, width)."""

    _dtype = np.uint8

    @staticmethod
    def _check_shape(arr):
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"GrayImage needs (h, w) uint8 data, got {arr.shape}")


class BinaryMask(_Raster):
    """Boolean mask, shape (height, width); True marks foreground."""

    _dtype = bool

    @staticmethod
    def _check_shape(arr):
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"BinaryMask needs (h, w) bool data, got {arr.shape}")

    @classmethod
    def blank(cls, width, height):
        """All-background mask of the given size."""
        return cls._wrap(np.zeros((height, width), dtype=bool))

    def count(self):
        """Number of foreground pixels."""
        return int(np.count_nonzero(self.pixels))


def _open_png(path):
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ImageDecodeError(f"{path}: not a PNG file (format={im.format})")
            im.load()
            return im.mode, np.asarray(im)
    except ImageDecodeError:
        raise
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"{path}: cannot decode PNG ({exc})") from exc


def _to_uint8(mode, arr, path):
    # Pillow hands 16-bit grayscale through as I;16 / I; 16-bit RGB it
    # already reduces to the high byte. Down-convert the rest the same way:
    # keep the high byte (truncate the low byte).
    if arr.dtype == np.uint8:
        return arr
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        return (arr.astype(np.uint32) >> 8).astype(np.uint8)
    raise ImageDecodeError(f"{path}: unsupported PNG pixel layout (mode={mode})")


def load_png(path):
    """Decode a PNG into an :class:`RgbImage`.

    Grayscale and paletted files are expanded to RGB, an alpha channel is
    discarded, and 16-bit files are down-converted to 8-bit by truncating
    the low byte.
    """
    mode, arr = _open_png(path)
    arr = _to_uint8(mode, arr, path)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif arr.ndim == 3 and arr.shape[2] == 4:
        arr = arr[:, :, :3]
    elif arr.ndim == 3 and arr.shape[2] == 2:  # LA
        arr = np.repeat(arr[:, :, :1], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageDecodeError(f"{path}: unsupported PNG channel layout {arr.shape}")
    return RgbImage._wrap(np.ascontiguousarray(arr))


def save_png(img, path):
    """Write an RGB image as a PNG."""
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def save_mask_png(mask, path):
    """Write a mask as a single-channel PNG: foreground 255, background 0."""
    data = np.where(mask.pixels, np.uint8(255), np.uint8(0))
    Image.fromarray(data, mode="L").save(path, format="PNG")


def load_mask_png(path):
    """Read a mask PNG; pixels brighter than 127 count as foreground."""
    mode, arr = _open_png(path)
    arr = _to_uint8(mode, arr, path)
    if arr.ndim == 3:
        arr = arr[:, :, 0]
    return BinaryMask._wrap(arr > 127)


def sobel_magnitude(img):
    """Sobel gradient magnitude of a grayscale image.

    Magnitudes are scaled by 1/8 and rounded so the result stays on the
    0-255 scale; images narrower than 3 pixels in either direction have no
    defined gradient and return all zeros.
    """
    if img.height < 3 or img.width < 3:
        return GrayImage._wrap(np.zeros_like(img.pixels))
    return GrayImage._wrap(_kernels.sobel_magnitude(img.pixels))


def dilate(mask, radius=1, iterations=1):
    """Dilate a mask with a (2*radius+1)^2 square element, repeatedly."""
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    return BinaryMask._wrap(_kernels.dilate(mask.pixels, radius, iterations))


def rgb_to_luma(img):
    """Rec. 601 luma: round(0.299 R + 0.587 G + 0.114 B) per pixel."""
    rgb = img.pixels.astype(np.float64)
    y = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return GrayImage._wrap(np.floor(y + 0.5).astype(np.uint8))
