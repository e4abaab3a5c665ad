"""Per-pixel transforms from RGB to the feature pairs used by the detector.

The working space is log opponent chromaticity: with L(x) = 105*log10(x+1)
applied to 8-bit channels, the features are I = L(G) and B_y = L(B) -
(L(G)+L(R))/2. The +1 guard pins L(0) = 0 and the 105 scale keeps values
near the 8-bit range; a multiplicative illumination change then shifts I by
an almost-constant offset and leaves B_y almost unchanged. HS/HV/SV and
YCb/YCr/CbCr projections are provided for side-by-side comparisons.
"""

import enum

import numpy as np

from .imaging import RgbImage

__all__ = ["FeaturePair", "FeaturePlane", "rgb_to_lo", "rgb_to_hsv",
           "rgb_to_ycbcr", "select_pair"]

LOG_OPPONENT_SCALE = 105.0

# L(x) for every 8-bit value
_LOG_LUT = LOG_OPPONENT_SCALE * np.log10(np.arange(256, dtype=np.float64) + 1.0)

LO_RANGE_A = (0.0, 253.0)
LO_RANGE_B = (-253.0, 253.0)


class FeaturePair(enum.Enum):
    """The seven evaluated feature-channel pairs."""

    IBY = "iby"
    HS = "hs"
    HV = "hv"
    SV = "sv"
    YCB = "ycb"
    YCR = "ycr"
    CBCR = "cbcr"

    @property
    def token(self):
        """Lowercase token used in CLI flags and report rows."""
        return self.value

    @classmethod
    def from_token(cls, token):
        try:
            return cls(token.strip().lower())
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown feature pair {token!r} (valid: {valid})") from None


class FeaturePlane:
    """A per-pixel feature pair (a, b) with its declared value ranges."""

    def __init__(self, a, b, pair, range_a, range_b):
        a = np.ascontiguousarray(a, dtype=np.float64)
        b = np.ascontiguousarray(b, dtype=np.float64)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValueError(f"feature planes must share a 2D shape: {a.shape} vs {b.shape}")
        self.a = a
        self.b = b
        self.pair = pair
        self.range_a = (float(range_a[0]), float(range_a[1]))
        self.range_b = (float(range_b[0]), float(range_b[1]))
        self.a.flags.writeable = False
        self.b.flags.writeable = False

    @property
    def height(self):
        return self.a.shape[0]

    @property
    def width(self):
        return self.a.shape[1]

    @property
    def dims(self):
        return (self.width, self.height)

    def values_at(self, xs, ys):
        """(a, b) values at the given pixel coordinates."""
        return self.a[ys, xs], self.b[ys, xs]


def rgb_to_lo(img):
    """Log opponent chromaticity features (I, B_y) of an image."""
    logs = _LOG_LUT[img.pixels]
    lr = logs[:, :, 0]
    lg = logs[:, :, 1]
    lb = logs[:, :, 2]
    i_plane = lg
    by_plane = lb - 0.5 * (lg + lr)
    return FeaturePlane(i_plane, by_plane, FeaturePair.IBY, LO_RANGE_A, LO_RANGE_B)


def rgb_to_hsv(img):
    """Hexcone HSV planes: H in degrees [0, 360), S and V in [0, 1].

    Achromatic pixels take H = 0. H is computed as (60 * diff) / delta plus
    the sector offset so that 8-bit inputs hitting exact sector fractions
    (e.g. H = 50) come out exact.
    """
    rgb = img.pixels.astype(np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    delta = mx - mn

    v = mx / 255.0
    s = np.divide(delta, mx, out=np.zeros_like(mx), where=mx > 0)

    safe_delta = np.where(delta > 0, delta, 1.0)
    h_r = (60.0 * (g - b)) / safe_delta
    h_r = np.where(h_r < 0, h_r + 360.0, h_r)
    h_g = (60.0 * (b - r)) / safe_delta + 120.0
    h_b = (60.0 * (r - g)) / safe_delta + 240.0
    h = np.select([delta == 0, mx == r, mx == g], [0.0, h_r, h_g], default=h_b)
    return h, s, v


def rgb_to_ycbcr(img):
    """Full-range BT.601 Y/Cb/Cr planes, clamped to [0, 255]."""
    rgb = img.pixels.astype(np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    clip = lambda p: np.clip(p, 0.0, 255.0)
    return clip(y), clip(cb), clip(cr)


_HSV_RANGES = {"h": (0.0, 360.0), "s": (0.0, 1.0), "v": (0.0, 1.0)}
_YCC_RANGE = (0.0, 255.0)


def select_pair(img, pair):
    """Project an image onto the two channels named by a feature pair."""
    if not isinstance(img, RgbImage):
        raise TypeError(f"expected RgbImage, got {type(img).__name__}")
    if pair is FeaturePair.IBY:
        return rgb_to_lo(img)
    if pair in (FeaturePair.HS, FeaturePair.HV, FeaturePair.SV):
        h, s, v = rgb_to_hsv(img)
        channels = {"h": h, "s": s, "v": v}
        ca, cb = pair.token
        return FeaturePlane(channels[ca], channels[cb], pair,
                            _HSV_RANGES[ca], _HSV_RANGES[cb])
    y, cb, cr = rgb_to_ycbcr(img)
    channels = {FeaturePair.YCB: (y, cb), FeaturePair.YCR: (y, cr),
                FeaturePair.CBCR: (cb, cr)}
    pa, pb = channels[pair]
    return FeaturePlane(pa, pb, pair, _YCC_RANGE, _YCC_RANGE)
