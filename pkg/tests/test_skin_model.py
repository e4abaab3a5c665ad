"""Histogram and Gaussian classifiers, smoothing, fusion, and the pipeline."""

import math

import numpy as np
import pytest

from skinfuse.colorspace import FeaturePair, FeaturePlane
from skinfuse.exceptions import DegenerateModelError
from skinfuse.face_region import EyePair, FaceSample
from skinfuse.imaging import BinaryMask, RgbImage
from skinfuse.skin_model import (DetectorParams, FusionMode, GaussianModel,
                                 Hist2D, SkinDetector, build_histogram,
                                 classify, classify_gauss, classify_hist,
                                 detect, fit_gaussian, fuse, smooth_histogram)

UNIT = (0.0, 1.0)


def _plane(a, b, range_a=UNIT, range_b=UNIT):
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    return FeaturePlane(a, b, FeaturePair.SV, range_a, range_b)


def _sample_covering(plane):
    return FaceSample.from_mask(
        BinaryMask(np.ones((plane.height, plane.width), dtype=bool)))


def _smoothed_hist(counts, range_a=UNIT, range_b=UNIT, lam=0.0):
    return Hist2D(np.asarray(counts, dtype=np.float64), range_a, range_b,
                  smoothed=True, lam=lam)


def _detector(counts, gauss=None, threshold=20.0, **kw):
    gauss = gauss or GaussianModel(mu=(0.5, 0.5), sigma=(1.0, 1.0))
    return SkinDetector(pair=FeaturePair.SV, hist=_smoothed_hist(counts, **kw),
                        gauss=gauss, hist_threshold=threshold)


def test_fusion_mode_tokens():
    assert FusionMode.from_token("fusion") is FusionMode.FUSION
    assert FusionMode.from_token("hist") is FusionMode.HIST_ONLY
    assert FusionMode.from_token("HIST_ONLY") is FusionMode.HIST_ONLY
    assert FusionMode.from_token("s2d") is FusionMode.HIST_ONLY
    assert FusionMode.from_token("gmm_only") is FusionMode.GMM_ONLY
    assert [m.token for m in FusionMode] == ["fusion", "hist", "gmm"]
    with pytest.raises(ValueError):
        FusionMode.from_token("both")


def test_build_histogram_identical_pixels_single_cell():
    plane = _plane([[0.31, 0.31, 0.31]], [[0.77, 0.77, 0.77]])
    hist = build_histogram(_sample_covering(plane), plane, bins=(8, 8))
    assert hist.mass == 3.0
    assert hist.counts.max() == 3.0
    assert np.count_nonzero(hist.counts) == 1


def test_build_histogram_upper_edge_in_last_bin():
    plane = _plane([[1.0]], [[1.0]])
    hist = build_histogram(_sample_covering(plane), plane, bins=(8, 6))
    assert hist.counts[7, 5] == 1.0


def test_build_histogram_matches_scalar_oracle(rng):
    lo_a, hi_a = -3.0, 5.0
    lo_b, hi_b = 2.0, 19.0
    n = 1000
    a = rng.uniform(lo_a, hi_a, n)
    b = rng.uniform(lo_b, hi_b, n)
    plane = _plane(a.reshape(25, 40), b.reshape(25, 40),
                   (lo_a, hi_a), (lo_b, hi_b))
    hist = build_histogram(_sample_covering(plane), plane, bins=(16, 11))

    expect = np.zeros((16, 11))
    for va, vb in zip(a, b):
        ia = min(int(math.floor((va - lo_a) * (16 / (hi_a - lo_a)))), 15)
        ib = min(int(math.floor((vb - lo_b) * (11 / (hi_b - lo_b)))), 10)
        expect[ia, ib] += 1.0
    assert np.array_equal(hist.counts, expect)
    assert hist.mass == float(n)


def test_build_histogram_rejects_out_of_range():
    plane = _plane([[0.2, 1.4]], [[0.5, 0.5]])
    with pytest.raises(ValueError):
        build_histogram(_sample_covering(plane), plane, bins=(4, 4))


def test_hist2d_validation():
    with pytest.raises(ValueError):
        Hist2D(-np.ones((4, 4)), UNIT, UNIT)
    with pytest.raises(ValueError):
        Hist2D(np.ones((4, 4, 2)), UNIT, UNIT)
    with pytest.raises(ValueError):
        Hist2D(np.ones((4, 4)), UNIT, UNIT, lam=-1.0)
    hist = Hist2D(np.ones((4, 6)), UNIT, UNIT)
    assert (hist.bins_a, hist.bins_b) == (4, 6)
    with pytest.raises(ValueError):
        hist.counts[0, 0] = 5.0


def _dense_smooth_oracle(counts, lam):
    """Rows-then-columns penalized solve via a dense linear system."""

    def solve_axis(y):
        n = y.shape[0]
        if n < 3 or lam == 0:
            return y.copy()
        d2 = np.diff(np.eye(n), n=2, axis=0)
        return np.linalg.solve(np.eye(n) + lam * (d2.T @ d2), y)

    z = solve_axis(counts.T).T
    return solve_axis(z)


def test_smooth_lambda_zero_is_bitwise_identity(rng):
    counts = rng.uniform(0, 50, (16, 16))
    hist = Hist2D(counts, UNIT, UNIT)
    out = smooth_histogram(hist, 0.0)
    assert out.smoothed and out.lam == 0.0
    assert np.array_equal(out.counts, counts)


def test_smooth_preserves_mass(rng):
    for lam in (1.0, 10.0, 100.0):
        counts = rng.uniform(0, 400, (32, 20))
        out = smooth_histogram(Hist2D(counts, UNIT, UNIT), lam)
        assert abs(out.mass - counts.sum()) <= 1e-6 * counts.sum()


def test_smooth_matches_dense_oracle(rng):
    spike = np.zeros((8, 8))
    spike[4, 4] = 1.0
    got = smooth_histogram(Hist2D(spike, UNIT, UNIT), 10.0).counts
    assert np.max(np.abs(got - _dense_smooth_oracle(spike, 10.0))) < 1e-9

    for lam in (1.0, 10.0, 100.0):
        counts = rng.uniform(0, 300, (12, 9))
        got = smooth_histogram(Hist2D(counts, UNIT, UNIT), lam).counts
        assert np.max(np.abs(got - _dense_smooth_oracle(counts, lam))) < 1e-9


def test_smooth_short_axes_pass_through(rng):
    counts = rng.uniform(0, 10, (2, 7))
    got = smooth_histogram(Hist2D(counts, UNIT, UNIT), 10.0).counts
    assert np.max(np.abs(got - _dense_smooth_oracle(counts, 10.0))) < 1e-12


def test_smoother_is_linear(rng):
    y1 = rng.uniform(0, 100, (10, 10))
    y2 = rng.uniform(0, 100, (10, 10))
    alpha, beta = 0.7, 2.3
    combined = smooth_histogram(
        Hist2D(alpha * y1 + beta * y2, UNIT, UNIT), 10.0).counts
    parts = (alpha * smooth_histogram(Hist2D(y1, UNIT, UNIT), 10.0).counts
             + beta * smooth_histogram(Hist2D(y2, UNIT, UNIT), 10.0).counts)
    assert np.max(np.abs(combined - parts)) < 1e-9


def test_smoother_preserves_rotational_symmetry(rng):
    raw = rng.uniform(0, 50, (12, 12))
    symmetric = raw + raw[::-1, ::-1]
    out = smooth_histogram(Hist2D(symmetric, UNIT, UNIT), 10.0).counts
    assert np.max(np.abs(out - out[::-1, ::-1])) < 1e-9


def _cell_counts(value):
    counts = np.zeros((4, 4))
    counts[2, 2] = value
    return counts


def test_classify_hist_threshold_is_strict():
    plane = _plane([[0.6]], [[0.6]])   # falls in bin (2, 2)
    at_threshold = classify_hist(_detector(_cell_counts(20.0)), plane)
    assert not at_threshold.pixels[0, 0]
    just_above = classify_hist(_detector(_cell_counts(20.0 + 1e-9)), plane)
    assert just_above.pixels[0, 0]


def test_classify_hist_out_of_range_is_background():
    counts = np.full((4, 4), 100.0)
    plane = _plane([[0.5, 1.5, -0.2]], [[0.5, 0.5, 0.5]])
    mask = classify_hist(_detector(counts), plane)
    assert mask.pixels.tolist() == [[True, False, False]]


def test_classify_hist_requires_smoothed():
    raw = Hist2D(np.full((4, 4), 30.0), UNIT, UNIT, smoothed=False)
    with pytest.raises(ValueError):
        SkinDetector(pair=FeaturePair.SV, hist=raw,
                     gauss=GaussianModel((0.5, 0.5), (1.0, 1.0)))


def test_raising_threshold_never_adds_pixels(rng):
    counts = rng.uniform(0, 60, (16, 16))
    plane = _plane(rng.uniform(0, 1, (9, 9)), rng.uniform(0, 1, (9, 9)))
    previous = None
    for threshold in (5.0, 20.0, 40.0):
        mask = classify_hist(_detector(counts, threshold=threshold), plane)
        if previous is not None:
            assert not np.any(mask.pixels & ~previous)
        previous = mask.pixels


def test_fit_gaussian_two_point_example():
    plane = _plane([[0.0, 2.0]], [[0.0, 2.0]], (-10.0, 10.0), (-10.0, 10.0))
    hist = smooth_histogram(
        build_histogram(_sample_covering(plane), plane, bins=(4, 4)), 0.0)
    model = fit_gaussian(_sample_covering(plane), plane, hist, threshold=1.0)
    assert model.mu == (1.0, 1.0)
    assert model.sigma == (2.0, 2.0)


def test_fit_gaussian_degenerate_cases():
    # identical surviving pixels: zero variance on both axes
    flat = _plane([[0.4] * 5], [[0.6] * 5])
    hist = smooth_histogram(build_histogram(_sample_covering(flat), flat,
                                            bins=(4, 4)), 0.0)
    with pytest.raises(DegenerateModelError):
        fit_gaussian(_sample_covering(flat), flat, hist, threshold=1.0)

    # threshold passes only one pixel's bin
    plane = _plane([[0.1, 0.9]], [[0.1, 0.9]])
    counts = np.zeros((4, 4))
    counts[0, 0] = 50.0
    with pytest.raises(DegenerateModelError):
        fit_gaussian(_sample_covering(plane), plane, _smoothed_hist(counts).
                     __class__(counts, UNIT, UNIT, smoothed=True),
                     threshold=20.0)


def test_fit_gaussian_matches_scalar_oracle(rng):
    a = rng.uniform(0.2, 0.8, 400)
    b = rng.uniform(0.1, 0.9, 400)
    plane = _plane(a.reshape(20, 20), b.reshape(20, 20))
    hist = _smoothed_hist(np.full((8, 8), 1000.0))
    model = fit_gaussian(_sample_covering(plane), plane, hist, threshold=20.0)

    mu_a = sum(a) / len(a)
    mu_b = sum(b) / len(b)
    var_a = sum((v - mu_a) ** 2 for v in a) / (len(a) - 1)
    var_b = sum((v - mu_b) ** 2 for v in b) / (len(b) - 1)
    assert model.mu[0] == pytest.approx(mu_a, abs=1e-9)
    assert model.mu[1] == pytest.approx(mu_b, abs=1e-9)
    assert model.sigma[0] == pytest.approx(var_a, abs=1e-9)
    assert model.sigma[1] == pytest.approx(var_b, abs=1e-9)


def test_gaussian_model_axes_and_validation():
    model = GaussianModel(mu=(0, 0), sigma=(4.0, 9.0))
    assert model.semi_axes == (4.0, 6.0)
    literal = GaussianModel(mu=(0, 0), sigma=(4.0, 9.0),
                            literal_variance_axes=True)
    assert literal.semi_axes == (4.0, 9.0)
    with pytest.raises(DegenerateModelError):
        GaussianModel(mu=(0, 0), sigma=(0.0, 1.0))
    with pytest.raises(ValueError):
        GaussianModel(mu=(0, 0), sigma=(1.0, 1.0), boundary_scale=0.0)


def _gauss_detector(mu, sigma, **kw):
    gauss = GaussianModel(mu=mu, sigma=sigma, **kw)
    return SkinDetector(pair=FeaturePair.SV,
                        hist=_smoothed_hist(np.zeros((4, 4)),
                                            (-100.0, 100.0), (-100.0, 100.0)),
                        gauss=gauss)


def test_classify_gauss_circular_examples():
    # sigma (4, 4) with scale 2 gives equal semi-axes s = 4 in every direction
    det = _gauss_detector((0.0, 0.0), (4.0, 4.0))
    plane = _plane([[0.0, 2.0, 8.0, 4.0]], [[0.0, 0.0, 0.0, 0.0]],
                   (-100.0, 100.0), (-100.0, 100.0))
    mask = classify_gauss(det, plane)
    # center, d = s/2, d = 2s, and d exactly = s (strict boundary)
    assert mask.pixels.tolist() == [[True, True, False, False]]


def _gauss_oracle(a, b, mu, sx, sy, exact):
    out = np.zeros(a.shape, dtype=bool)
    for idx in np.ndindex(a.shape):
        dx = a[idx] - mu[0]
        dy = b[idx] - mu[1]
        d = math.sqrt(dx * dx + dy * dy)
        tau = math.atan2(dy, dx)
        if exact:
            boundary = sx * sy / math.sqrt((sy * math.cos(tau)) ** 2
                                           + (sx * math.sin(tau)) ** 2)
        else:
            boundary = math.sqrt((sx * math.cos(tau)) ** 2
                                 + (sy * math.sin(tau)) ** 2)
        out[idx] = boundary > d or d == 0.0
    return out


def test_classify_gauss_matches_scalar_oracle(rng):
    for exact in (False, True):
        mu = (rng.uniform(-1, 1), rng.uniform(-1, 1))
        sigma = (rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0))
        det = _gauss_detector(mu, sigma, exact_ellipse=exact)
        a = rng.uniform(-8, 8, (12, 12))
        b = rng.uniform(-8, 8, (12, 12))
        plane = _plane(a, b, (-100.0, 100.0), (-100.0, 100.0))
        sx, sy = det.gauss.semi_axes
        got = classify_gauss(det, plane).pixels
        assert np.array_equal(got, _gauss_oracle(a, b, mu, sx, sy, exact))


def test_exact_ellipse_tightens_diagonal():
    """Along the diagonal the axis-mix radius overshoots the true ellipse."""
    point = 3.5 / math.sqrt(2.0)
    plane = _plane([[point]], [[point]], (-100.0, 100.0), (-100.0, 100.0))
    loose = _gauss_detector((0.0, 0.0), (1.0, 9.0))          # axes (2, 6)
    tight = _gauss_detector((0.0, 0.0), (1.0, 9.0), exact_ellipse=True)
    assert classify_gauss(loose, plane).pixels[0, 0]
    assert not classify_gauss(tight, plane).pixels[0, 0]


def test_classify_gauss_translation_invariance():
    # eighth-unit grid values stay exactly representable after the shift
    base_a = np.arange(-16, 16, dtype=np.float64).reshape(4, 8) * 0.125
    base_b = base_a[::-1] * 0.25
    shift = 16.0
    det0 = _gauss_detector((0.25, -0.5), (1.0, 2.0))
    det1 = _gauss_detector((0.25 + shift, -0.5 + shift), (1.0, 2.0))
    p0 = _plane(base_a, base_b, (-100.0, 100.0), (-100.0, 100.0))
    p1 = _plane(base_a + shift, base_b + shift, (-100.0, 100.0), (-100.0, 100.0))
    assert np.array_equal(classify_gauss(det0, p0).pixels,
                          classify_gauss(det1, p1).pixels)


def test_classifiers_are_per_pixel(rng):
    n = 60
    a = rng.uniform(0, 1, n)
    b = rng.uniform(0, 1, n)
    det = _detector(rng.uniform(0, 40, (8, 8)), threshold=15.0)
    det = SkinDetector(pair=det.pair, hist=det.hist,
                       gauss=GaussianModel((0.5, 0.5), (0.02, 0.05)),
                       hist_threshold=det.hist_threshold)
    perm = rng.permutation(n)
    for fn in (classify_hist, classify_gauss):
        direct = fn(det, _plane(a, b)).pixels[0]
        permuted = fn(det, _plane(a[perm], b[perm])).pixels[0]
        assert np.array_equal(direct[perm], permuted)


def test_fuse_truth_table_and_oracle(rng):
    h = BinaryMask(np.array([[True, True, False, False]]))
    g = BinaryMask(np.array([[True, False, True, False]]))
    assert fuse(h, g).pixels.tolist() == [[True, False, False, False]]

    m = BinaryMask(rng.random((9, 7)) < 0.5)
    ones = BinaryMask(np.ones((9, 7), dtype=bool))
    assert np.array_equal(fuse(m, ones).pixels, m.pixels)

    other = BinaryMask(rng.random((9, 7)) < 0.5)
    assert np.array_equal(fuse(m, other).pixels, m.pixels & other.pixels)
    with pytest.raises(ValueError):
        fuse(m, BinaryMask(np.ones((3, 3), dtype=bool)))


def test_classify_dispatches_modes(rng):
    raw = np.zeros((16, 16))
    raw[:, 8:] = rng.uniform(60, 120, (16, 8))
    hist = smooth_histogram(Hist2D(raw, UNIT, UNIT), 10.0)
    det = SkinDetector(pair=FeaturePair.SV, hist=hist,
                       gauss=GaussianModel((0.5, 0.5), (0.01, 0.02)),
                       hist_threshold=20.0)
    plane = _plane(rng.uniform(0, 1, (11, 13)), rng.uniform(0, 1, (11, 13)))
    hist_mask = classify(det, plane, FusionMode.HIST_ONLY)
    gauss_mask = classify(det, plane, FusionMode.GMM_ONLY)
    fused = classify(det, plane, FusionMode.FUSION)
    assert hist_mask.count() not in (0, plane.width * plane.height)
    assert np.array_equal(fused.pixels, hist_mask.pixels & gauss_mask.pixels)


def test_detect_without_eyes_is_blank():
    img = RgbImage(np.full((20, 30, 3), 120, dtype=np.uint8))
    reasons = []
    mask = detect(img, [], on_fallback=reasons.append)
    assert mask.count() == 0 and mask.dims == (30, 20)
    assert reasons == ["no face input"]


def test_detect_flat_face_falls_back_to_blank():
    img = RgbImage(np.full((60, 60, 3), (205, 140, 110), dtype=np.uint8))
    reasons = []
    mask = detect(img, [EyePair((20, 30), (40, 30))],
                  on_fallback=reasons.append)
    assert mask.count() == 0
    assert len(reasons) == 1 and "variance" in reasons[0]


def _face_and_arm_scene():
    """Skin-toned face ellipse and arm rectangle on a green background.

    The face carries a one-level wobble on the green channel so the model
    fit is non-degenerate; the arm stays at the exact base tone.
    """
    rng = np.random.default_rng(42)
    h, w = 100, 120
    arr = np.zeros((h, w, 3), dtype=np.uint8)
    arr[:, :] = (40, 160, 60)
    tone = np.array([205, 140, 110], dtype=np.uint8)

    ys, xs = np.ogrid[0:h, 0:w]
    face = ((xs - 35.0) / 22.0) ** 2 + ((ys - 44.0) / 27.0) ** 2 <= 1.0
    arr[face] = tone
    wobble = rng.integers(-1, 2, size=(h, w))
    g = arr[:, :, 1].astype(np.int16)
    g[face] += wobble[face]
    arr[:, :, 1] = g.astype(np.uint8)

    arm = np.zeros((h, w), dtype=bool)
    arm[60:80, 70:110] = True
    arr[arm] = tone
    return RgbImage(arr), face, arm


def test_detect_generalizes_from_face_to_arm():
    img, face, arm = _face_and_arm_scene()
    eyes = [EyePair((25, 36), (45, 36))]
    mask = detect(img, eyes).pixels
    assert mask[face].all()
    assert mask[arm].all()
    assert not mask[~(face | arm)].any()
    # each single classifier accepts at least everything the fusion does
    hist_mask = detect(img, eyes, mode=FusionMode.HIST_ONLY).pixels
    gauss_mask = detect(img, eyes, mode=FusionMode.GMM_ONLY).pixels
    assert not np.any(mask & ~hist_mask) and not np.any(mask & ~gauss_mask)


def test_detector_params_validation():
    with pytest.raises(ValueError):
        DetectorParams(bins_a=0)
    with pytest.raises(ValueError):
        DetectorParams(lambda_=-0.5)
    with pytest.raises(ValueError):
        DetectorParams(hist_threshold=0.0)
    params = DetectorParams()
    assert (params.bins_a, params.bins_b) == (64, 64)
    assert params.lambda_ == 10.0 and params.hist_threshold == 20.0
