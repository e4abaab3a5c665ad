"""Per-person skin models and their fusion.

Two classifiers are fitted online to the face sample of the current image:

* a 2D histogram of the feature pair, regularized by a penalized
  least-squares smoother (second-order difference penalty, applied
  separably along rows then columns), thresholded at a fixed count;
* a single elliptical Gaussian (diagonal covariance) over the sample
  pixels whose histogram cells pass that threshold, accepting a pixel when
  the boundary radius at its angle exceeds its distance to the mean.

The fused decision is the per-pixel product of the two binary outputs,
i.e. their intersection, which can only remove false positives relative to
either classifier alone. When no usable face sample exists the pipeline
yields an all-background mask instead of failing.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from . import _kernels
from .colorspace import FeaturePair, select_pair
from .exceptions import DegenerateModelError, EmptyFaceSampleError
from .face_region import PreprocessConfig, extract_face_sample, union_samples
from .imaging import BinaryMask

__all__ = ["Hist2D", "GaussianModel", "SkinDetector", "DetectorParams",
           "FusionMode", "build_histogram", "smooth_histogram",
           "classify_hist", "fit_gaussian", "classify_gauss", "fuse",
           "classify", "fit_detector", "detect"]


class FusionMode(enum.Enum):
    """Which classifier output the pipeline returns."""

    FUSION = "fusion"
    HIST_ONLY = "hist"
    GMM_ONLY = "gmm"

    @property
    def token(self):
        return self.value

    @classmethod
    def from_token(cls, token):
        aliases = {"hist_only": "hist", "gmm_only": "gmm", "s2d": "hist"}
        key = token.strip().lower()
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown fusion mode {token!r} "
                             f"(valid: fusion, hist, gmm)") from None


class Hist2D:
    """Binned 2D density of a feature pair, raw or smoothed."""

    def __init__(self, counts, range_a, range_b, smoothed=False, lam=0.0):
        counts = np.ascontiguousarray(counts, dtype=np.float64)
        if counts.ndim != 2:
            raise ValueError("histogram counts must be a 2D matrix")
        if lam < 0:
            raise ValueError("smoothing penalty must be >= 0")
        if not smoothed and np.any(counts < 0):
            raise ValueError("raw histogram counts must be non-negative")
        self.counts = counts
        self.range_a = (float(range_a[0]), float(range_a[1]))
        self.range_b = (float(range_b[0]), float(range_b[1]))
        self.smoothed = bool(smoothed)
        self.lam = float(lam)
        self.counts.flags.writeable = False

    @property
    def bins_a(self):
        return self.counts.shape[0]

    @property
    def bins_b(self):
        return self.counts.shape[1]

    @property
    def mass(self):
        return float(self.counts.sum())


@dataclass(frozen=True)
class GaussianModel:
    """Mean and diagonal covariance of the thresholded skin distribution.

    Semi-axes of the accept ellipse default to boundary_scale * sqrt(sigma);
    ``literal_variance_axes`` uses the variances themselves as axes, and
    ``exact_ellipse`` swaps the boundary-radius formula for the true radial
    distance to the ellipse.
    """

    mu: tuple
    sigma: tuple
    boundary_scale: float = 2.0
    literal_variance_axes: bool = False
    exact_ellipse: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mu", (float(self.mu[0]), float(self.mu[1])))
        object.__setattr__(self, "sigma", (float(self.sigma[0]), float(self.sigma[1])))
        if self.sigma[0] <= 0 or self.sigma[1] <= 0:
            raise DegenerateModelError(f"non-positive variance {self.sigma}")
        if self.boundary_scale <= 0:
            raise ValueError("boundary_scale must be positive")

    @property
    def semi_axes(self):
        if self.literal_variance_axes:
            return self.sigma
        return (self.boundary_scale * math.sqrt(self.sigma[0]),
                self.boundary_scale * math.sqrt(self.sigma[1]))


@dataclass(frozen=True)
class SkinDetector:
    """A fitted pair of models over one feature pair."""

    pair: FeaturePair
    hist: Hist2D
    gauss: GaussianModel
    hist_threshold: float = 20.0

    def __post_init__(self):
        if not self.hist.smoothed:
            raise ValueError("detector requires a smoothed histogram")
        if self.hist_threshold <= 0:
            raise ValueError("hist_threshold must be positive")


@dataclass(frozen=True)
class DetectorParams:
    """Flat parameter set of the model-fitting stage.

    ``lambda_`` serializes under the key ``lambda`` in config files and
    report echoes.
    """

    bins_a: int = 64
    bins_b: int = 64
    lambda_: float = 10.0
    hist_threshold: float = 20.0
    boundary_scale: float = 2.0
    literal_variance_axes: bool = False
    exact_ellipse: bool = False

    def __post_init__(self):
        if self.bins_a < 1 or self.bins_b < 1:
            raise ValueError("bin counts must be >= 1")
        if self.lambda_ < 0:
            raise ValueError("lambda must be >= 0")
        if self.hist_threshold <= 0:
            raise ValueError("hist_threshold must be positive")


def build_histogram(sample, features, bins=(64, 64)):
    """Bin the face-sample pixels of a feature plane into raw counts.

    Uniform partition of the declared ranges; a value exactly at the upper
    range edge falls in the last bin. Total mass equals the sample size.
    """
    if features.dims != sample.source_dims:
        raise ValueError(f"feature plane dims {features.dims} do not match "
                         f"sample dims {sample.source_dims}")
    xs = sample.pixels[:, 0]
    ys = sample.pixels[:, 1]
    a_vals, b_vals = features.values_at(xs, ys)
    counts = _kernels.hist2d(a_vals, b_vals,
                             features.range_a[0], features.range_a[1],
                             features.range_b[0], features.range_b[1],
                             int(bins[0]), int(bins[1]))
    return Hist2D(counts, features.range_a, features.range_b, smoothed=False)


def _difference_penalty_bands(n, lam):
    # upper-banded form of I + lam * D2'D2 for solveh_banded
    d2 = np.diff(np.eye(n), n=2, axis=0)
    a = np.eye(n) + lam * (d2.T @ d2)
    bands = np.zeros((3, n))
    bands[2] = np.diag(a)
    bands[1, 1:] = np.diag(a, k=1)
    bands[0, 2:] = np.diag(a, k=2)
    return bands


def _smooth_axis(y, lam):
    # solve (I + lam*D2'D2) z = y column-wise; axes shorter than 3 have no
    # second differences and pass through unchanged
    n = y.shape[0]
    if n < 3 or lam == 0:
        return y.copy()
    return solveh_banded(_difference_penalty_bands(n, lam), y, lower=False)


def smooth_histogram(hist, lam):
    """Penalized least-squares smoothing of a 2D histogram.

    Solves (I + lam * D2'D2) z = y separably: along every row, then along
    every column of the result. The constant vector is an eigenvector of
    the smoother with eigenvalue 1, so total mass is preserved. lam = 0
    returns the counts unchanged (flagged smoothed).
    """
    if lam < 0:
        raise ValueError("smoothing penalty must be >= 0")
    z = _smooth_axis(hist.counts.T, lam).T   # along rows (b axis)
    z = _smooth_axis(z, lam)                 # along columns (a axis)
    return Hist2D(z, hist.range_a, hist.range_b, smoothed=True, lam=lam)


def classify_hist(detector, features):
    """Histogram decision: skin iff the cell count strictly exceeds the
    threshold; out-of-range pixels are background."""
    hist = detector.hist
    if not hist.smoothed:
        raise ValueError("classify_hist requires a smoothed histogram")
    mask = _kernels.hist_classify(features.a, features.b, hist.counts,
                                  hist.range_a[0], hist.range_a[1],
                                  hist.range_b[0], hist.range_b[1],
                                  detector.hist_threshold)
    return BinaryMask._wrap(mask)


def fit_gaussian(sample, features, hist, threshold=20.0,
                 boundary_scale=2.0, literal_variance_axes=False,
                 exact_ellipse=False):
    """Fit the single elliptical Gaussian to the thresholded distribution.

    Only sample pixels whose smoothed histogram cell strictly exceeds the
    threshold contribute; mean and per-axis sample variance (n-1) over
    those pixels define the model. Fewer than two survivors, or zero spread
    on either axis, raises :class:`DegenerateModelError`.
    """
    if not hist.smoothed:
        raise ValueError("fit_gaussian requires a smoothed histogram")
    xs = sample.pixels[:, 0]
    ys = sample.pixels[:, 1]
    a_vals, b_vals = features.values_at(xs, ys)
    passed = _kernels.hist_classify(a_vals[None, :], b_vals[None, :],
                                    hist.counts,
                                    hist.range_a[0], hist.range_a[1],
                                    hist.range_b[0], hist.range_b[1],
                                    threshold)[0]
    a_keep = a_vals[passed]
    b_keep = b_vals[passed]
    if a_keep.size < 2:
        raise DegenerateModelError(
            f"only {a_keep.size} sample pixels pass the histogram threshold")
    if a_keep.min() == a_keep.max() or b_keep.min() == b_keep.max():
        raise DegenerateModelError("sample has zero variance on an axis")
    mu = (float(a_keep.mean()), float(b_keep.mean()))
    sigma = (float(a_keep.var(ddof=1)), float(b_keep.var(ddof=1)))
    return GaussianModel(mu=mu, sigma=sigma, boundary_scale=boundary_scale,
                         literal_variance_axes=literal_variance_axes,
                         exact_ellipse=exact_ellipse)


def classify_gauss(detector, features):
    """Elliptical Gaussian decision: skin iff the boundary distance at the
    pixel's angle exceeds its distance to the mean (centre pixels are skin)."""
    g = detector.gauss
    sx, sy = g.semi_axes
    mask = _kernels.gauss_classify(features.a, features.b, g.mu[0], g.mu[1],
                                   sx, sy, g.exact_ellipse)
    return BinaryMask._wrap(mask)


def fuse(hist_mask, gauss_mask):
    """Product rule over binary outputs: the per-pixel logical AND."""
    if hist_mask.pixels.shape != gauss_mask.pixels.shape:
        raise ValueError(f"mask dimensions differ: {hist_mask.dims} "
                         f"vs {gauss_mask.dims}")
    return BinaryMask._wrap(hist_mask.pixels & gauss_mask.pixels)


def classify(detector, features, mode=FusionMode.FUSION):
    """Apply a fitted detector to a feature plane under a fusion mode."""
    if mode is FusionMode.HIST_ONLY:
        return classify_hist(detector, features)
    if mode is FusionMode.GMM_ONLY:
        return classify_gauss(detector, features)
    return fuse(classify_hist(detector, features),
                classify_gauss(detector, features))


def fit_detector(features, sample, params=None):
    """Fit both models on a face sample over a feature plane."""
    params = params or DetectorParams()
    raw = build_histogram(sample, features, (params.bins_a, params.bins_b))
    smoothed = smooth_histogram(raw, params.lambda_)
    gauss = fit_gaussian(sample, features, smoothed,
                         threshold=params.hist_threshold,
                         boundary_scale=params.boundary_scale,
                         literal_variance_axes=params.literal_variance_axes,
                         exact_ellipse=params.exact_ellipse)
    return SkinDetector(pair=features.pair, hist=smoothed, gauss=gauss,
                        hist_threshold=params.hist_threshold)


def detect(img, eyes, pair=FeaturePair.IBY, cfg=None, params=None,
           mode=FusionMode.FUSION, on_fallback=None):
    """Full pipeline: face sample, model fit, classification over the image.

    ``eyes`` is a list of :class:`EyePair` (multiple faces pool their
    samples). With no eyes, or when the sample or model fit degenerates,
    the result is the all-background mask rather than an error;
    ``on_fallback``, when given, receives the reason string.
    """
    cfg = cfg or PreprocessConfig()
    params = params or DetectorParams()

    def blank(reason):
        if on_fallback is not None:
            on_fallback(reason)
        return BinaryMask.blank(img.width, img.height)

    if not eyes:
        return blank("no face input")
    features = select_pair(img, pair)
    try:
        samples = [extract_face_sample(img, e, cfg) for e in eyes]
        detector = fit_detector(features, union_samples(samples), params)
    except (EmptyFaceSampleError, DegenerateModelError) as exc:
        return blank(str(exc))
    return classify(detector, features, mode)
