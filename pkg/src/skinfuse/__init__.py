"""Fusion-based human skin detection.

A per-image skin detector seeded from an eye-anchored face region: pixels
sampled inside an elliptical face patch (minus edge structure) train both a
smoothed 2D color histogram and an elliptical Gaussian boundary, and the
fused decision is the AND of the two. Works in log opponent chromaticity by
default with HSV and YCbCr pairs available for comparison runs.
"""

from ._kernels import backend_name
from .colorspace import FeaturePair, rgb_to_hsv, rgb_to_lo, rgb_to_ycbcr, select_pair
from .evaluation import (Baseline, Confusion, EvalReport, MetricSet, Variant,
                         classify_baseline, confusion, f_score, load_dataset,
                         metrics, run_comparison)
from .exceptions import (DegenerateModelError, EmptyFaceSampleError,
                         ImageDecodeError, InvalidAnnotationError,
                         SkinfuseError)
from .face_region import (EyePair, FaceSample, PreprocessConfig,
                          elliptical_mask, extract_face_sample,
                          load_annotations, union_samples)
from .imaging import (BinaryMask, GrayImage, RgbImage, dilate, load_mask_png,
                      load_png, rgb_to_luma, save_mask_png, save_png,
                      sobel_magnitude)
from .skin_model import (DetectorParams, FusionMode, GaussianModel, Hist2D,
                         SkinDetector, build_histogram, classify,
                         classify_gauss, classify_hist, detect, fit_detector,
                         fit_gaussian, fuse, smooth_histogram)
from .synthetic import generate_suite

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    # colorspace
    "FeaturePair", "rgb_to_lo", "rgb_to_hsv", "rgb_to_ycbcr", "select_pair",
    # imaging
    "RgbImage", "GrayImage", "BinaryMask", "load_png", "save_png",
    "load_mask_png", "save_mask_png", "sobel_magnitude", "dilate",
    "rgb_to_luma",
    # face region
    "EyePair", "FaceSample", "PreprocessConfig", "elliptical_mask",
    "extract_face_sample", "union_samples", "load_annotations",
    # models
    "Hist2D", "GaussianModel", "SkinDetector", "DetectorParams", "FusionMode",
    "build_histogram", "smooth_histogram", "classify_hist", "fit_gaussian",
    "classify_gauss", "fuse", "classify", "fit_detector", "detect",
    # evaluation
    "Confusion", "MetricSet", "EvalReport", "Baseline", "Variant",
    "confusion", "metrics", "f_score", "classify_baseline", "load_dataset",
    "run_comparison",
    # fixtures
    "generate_suite",
    # errors
    "SkinfuseError", "ImageDecodeError", "InvalidAnnotationError",
    "EmptyFaceSampleError", "DegenerateModelError",
]
