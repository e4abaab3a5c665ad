"""Eye-anchored face sampling.

From a pair of eye coordinates we place an ellipse over the face (full axes
1.6*D across the eye line and 1.8*D perpendicular to it, D = inter-eye
distance, centred on the eye midpoint), then strip non-smooth texture --
eyes, brows, mouth -- by removing dilated Sobel edges. What survives is the
skin sample the per-person color models are fitted to.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyFaceSampleError, InvalidAnnotationError
from .imaging import BinaryMask, dilate, rgb_to_luma, sobel_magnitude

__all__ = ["EyePair", "FaceSample", "PreprocessConfig", "elliptical_mask",
           "extract_face_sample", "union_samples", "load_annotations"]


@dataclass(frozen=True)
class PreprocessConfig:
    """Tunables of the face-sampling stage.

    The axis factors multiply the inter-eye distance; with
    ``axes_are_full_lengths`` (the default) they are read as full axis
    lengths, i.e. semi-axes of 0.8*D and 0.9*D. ``edge_threshold`` applies
    to the 1/8-scaled Sobel magnitude, so it lives on the 0-255 scale.
    """

    minor_axis_factor: float = 1.6
    major_axis_factor: float = 1.8
    axes_are_full_lengths: bool = True
    edge_threshold: int = 96
    dilate_radius: int = 1
    dilate_iterations: int = 2
    rotate_with_eye_line: bool = True

    def __post_init__(self):
        if self.minor_axis_factor <= 0 or self.major_axis_factor <= 0:
            raise ValueError("axis factors must be positive")
        if not 0 <= self.edge_threshold <= 255:
            raise ValueError("edge_threshold must be in [0, 255]")

    def semi_axes(self, eye_distance):
        """(across-eye-line, perpendicular) semi-axis lengths."""
        scale = 0.5 if self.axes_are_full_lengths else 1.0
        return (self.minor_axis_factor * eye_distance * scale,
                self.major_axis_factor * eye_distance * scale)


@dataclass(frozen=True)
class EyePair:
    """Left and right eye pixel coordinates of one face."""

    left: tuple
    right: tuple

    def __post_init__(self):
        left = (float(self.left[0]), float(self.left[1]))
        right = (float(self.right[0]), float(self.right[1]))
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        if left == right:
            raise InvalidAnnotationError(f"eyes coincide at {left}")

    @property
    def distance(self):
        return math.hypot(self.right[0] - self.left[0], self.right[1] - self.left[1])

    @property
    def midpoint(self):
        return ((self.left[0] + self.right[0]) / 2.0,
                (self.left[1] + self.right[1]) / 2.0)

    def check_bounds(self, dims):
        width, height = dims
        for name, (x, y) in (("left", self.left), ("right", self.right)):
            if not (0 <= x < width and 0 <= y < height):
                raise InvalidAnnotationError(
                    f"{name} eye ({x}, {y}) outside {width}x{height} image"
                )


@dataclass(frozen=True)
class FaceSample:
    """Smooth face-region pixels of one image.

    ``pixels`` is an (n, 2) array of (x, y) coordinates enumerating the
    mask's foreground in row-major order.
    """

    mask: BinaryMask
    pixels: np.ndarray
    source_dims: tuple

    @classmethod
    def from_mask(cls, mask):
        if not mask.pixels.any():
            raise EmptyFaceSampleError("face sample has no pixels")
        yx = np.argwhere(mask.pixels)
        pixels = np.ascontiguousarray(yx[:, ::-1])
        pixels.flags.writeable = False
        return cls(mask=mask, pixels=pixels, source_dims=mask.dims)

    def __len__(self):
        return self.pixels.shape[0]


def elliptical_mask(dims, eyes, cfg=None):
    """Rasterize the eye-anchored face ellipse.

    A pixel is foreground when its coordinates, expressed in the eye-aligned
    frame (or the image frame when ``rotate_with_eye_line`` is off), satisfy
    (u/sa)^2 + (v/sb)^2 <= 1; points exactly on the boundary are inside.
    The rotation uses the eye-line direction cosines rather than an angle,
    which makes the mask exactly invariant under swapping the two eyes.
    """
    cfg = cfg or PreprocessConfig()
    width, height = dims
    eyes.check_bounds(dims)
    d_eye = eyes.distance
    if d_eye <= 0:
        raise InvalidAnnotationError("inter-eye distance is zero")
    sa, sb = cfg.semi_axes(d_eye)
    cx, cy = eyes.midpoint

    yy, xx = np.mgrid[0:height, 0:width]
    dx = xx - cx
    dy = yy - cy
    if cfg.rotate_with_eye_line:
        ex = (eyes.right[0] - eyes.left[0]) / d_eye
        ey = (eyes.right[1] - eyes.left[1]) / d_eye
    else:
        ex, ey = 1.0, 0.0
    u = dx * ex + dy * ey
    v = -dx * ey + dy * ex
    inside = (u / sa) ** 2 + (v / sb) ** 2 <= 1.0
    return BinaryMask._wrap(inside)


def extract_face_sample(img, eyes, cfg=None):
    """Face ellipse minus dilated Sobel edges, as a :class:`FaceSample`.

    Raises :class:`EmptyFaceSampleError` when edge removal eats the whole
    ellipse, so callers can fall back to a blank output mask.
    """
    cfg = cfg or PreprocessConfig()
    ellipse = elliptical_mask(img.dims, eyes, cfg)
    edges = sobel_magnitude(rgb_to_luma(img)).pixels > cfg.edge_threshold
    if edges.any() and cfg.dilate_iterations > 0:
        edges = dilate(BinaryMask._wrap(edges), cfg.dilate_radius,
                       cfg.dilate_iterations).pixels
    return FaceSample.from_mask(BinaryMask._wrap(ellipse.pixels & ~edges))


def union_samples(samples):
    """Pool several face samples of one image into a single sample."""
    if not samples:
        raise ValueError("no samples to union")
    dims = samples[0].source_dims
    if any(s.source_dims != dims for s in samples):
        raise ValueError("cannot union samples from different image sizes")
    merged = np.zeros_like(samples[0].mask.pixels)
    for s in samples:
        merged |= s.mask.pixels
    return FaceSample.from_mask(BinaryMask._wrap(merged))


def load_annotations(path):
    """Read an eye-annotation file.

    The file is a JSON array of records ``{"image": <relative path>,
    "left_eye": [x, y], "right_eye": [x, y]}``; an image may appear several
    times (one record per face). Returns a dict mapping the image path to
    its list of :class:`EyePair`.
    """
    with open(path, "r", encoding="utf-8") as fh:
        records = json.load(fh)
    if not isinstance(records, list):
        raise InvalidAnnotationError(f"{path}: expected a JSON array of records")
    table = {}
    for i, rec in enumerate(records):
        try:
            image = rec["image"]
            left = rec["left_eye"]
            right = rec["right_eye"]
            if not isinstance(image, str):
                raise TypeError(f"image must be a string, got {type(image).__name__}")
            if len(left) != 2 or len(right) != 2:
                raise TypeError("eye coordinates must be [x, y] pairs")
            pair = EyePair((float(left[0]), float(left[1])),
                           (float(right[0]), float(right[1])))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidAnnotationError(f"{path}: bad record #{i}: {exc}") from exc
        table.setdefault(image, []).append(pair)
    return table
