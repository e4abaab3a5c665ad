"""Eye-anchored face ellipse, edge removal, and annotation loading."""

import json
import math

import numpy as np
import pytest

from skinfuse.exceptions import EmptyFaceSampleError, InvalidAnnotationError
from skinfuse.face_region import (EyePair, FaceSample, PreprocessConfig,
                                  elliptical_mask, extract_face_sample,
                                  load_annotations, union_samples)
from skinfuse.imaging import BinaryMask, RgbImage


def test_eye_pair_normalizes_and_validates():
    pair = EyePair((40, 50), (60.0, 50.0))
    assert pair.left == (40.0, 50.0) and isinstance(pair.left[0], float)
    assert pair.distance == 20.0
    assert pair.midpoint == (50.0, 50.0)
    with pytest.raises(InvalidAnnotationError):
        EyePair((5, 5), (5, 5))
    with pytest.raises(InvalidAnnotationError):
        EyePair((-1, 10), (20, 10)).check_bounds((30, 30))
    with pytest.raises(InvalidAnnotationError):
        EyePair((10, 10), (30, 10)).check_bounds((30, 30))
    EyePair((0, 0), (29.5, 29.0)).check_bounds((30, 30))


def test_preprocess_config_axes():
    cfg = PreprocessConfig()
    assert cfg.semi_axes(20.0) == (16.0, 18.0)
    literal = PreprocessConfig(axes_are_full_lengths=False)
    assert literal.semi_axes(20.0) == (32.0, 36.0)
    with pytest.raises(ValueError):
        PreprocessConfig(minor_axis_factor=0.0)
    with pytest.raises(ValueError):
        PreprocessConfig(edge_threshold=300)


def _ellipse_oracle(dims, eyes, rotate=True):
    """Point-in-ellipse test in the eye-aligned frame, one pixel at a time."""
    width, height = dims
    cx, cy = eyes.midpoint
    d = eyes.distance
    sa, sb = 0.8 * d, 0.9 * d
    theta = math.atan2(eyes.right[1] - eyes.left[1],
                       eyes.right[0] - eyes.left[0]) if rotate else 0.0
    out = np.zeros((height, width), dtype=bool)
    for y in range(height):
        for x in range(width):
            dx, dy = x - cx, y - cy
            u = dx * math.cos(theta) + dy * math.sin(theta)
            v = -dx * math.sin(theta) + dy * math.cos(theta)
            out[y, x] = (u / sa) ** 2 + (v / sb) ** 2 <= 1.0
    return out


def test_elliptical_mask_horizontal_eyes():
    eyes = EyePair((40, 50), (60, 50))
    mask = elliptical_mask((100, 100), eyes).pixels
    assert mask[50, 50]            # center
    assert mask[50, 66]            # dx = 16 sits exactly on the boundary
    assert not mask[50, 67]        # dx = 17 > semi-axis 16
    assert mask[68, 50] and not mask[69, 50]   # dy bound is 18
    assert np.array_equal(mask, _ellipse_oracle((100, 100), eyes))


def test_elliptical_mask_vertical_eyes_rotates():
    """A 90-degree eye line swaps the axis roles; boundary pixels stay inside."""
    eyes = EyePair((50, 40), (50, 60))
    mask = elliptical_mask((100, 100), eyes).pixels
    assert mask[50, 68]            # 18 along x: exactly on the rotated boundary
    assert not mask[50, 69]
    assert mask[65, 50]            # 15 along the eye line, inside 16
    assert not mask[67, 50]
    assert np.array_equal(mask, _ellipse_oracle((100, 100), eyes))


def test_elliptical_mask_rotation_flag_off():
    eyes = EyePair((30, 20), (40, 44))   # slanted eye line
    cfg = PreprocessConfig(rotate_with_eye_line=False)
    mask = elliptical_mask((80, 80), eyes, cfg).pixels
    assert np.array_equal(mask, _ellipse_oracle((80, 80), eyes, rotate=False))


def test_elliptical_mask_eye_swap_and_oracle(rng):
    for _ in range(20):
        left = tuple(rng.uniform(25, 55, size=2))
        right = tuple(rng.uniform(25, 55, size=2))
        if math.dist(left, right) < 4.0:
            continue
        eyes = EyePair(left, right)
        mask = elliptical_mask((80, 80), eyes).pixels
        swapped = elliptical_mask((80, 80), EyePair(right, left)).pixels
        assert np.array_equal(mask, swapped)
        assert np.array_equal(mask, _ellipse_oracle((80, 80), eyes))


def test_elliptical_mask_translation_equivariance():
    base = EyePair((30, 32), (44, 38))
    moved = EyePair((33, 36), (47, 42))
    m0 = elliptical_mask((100, 100), base).pixels
    m1 = elliptical_mask((100, 100), moved).pixels
    assert np.array_equal(np.roll(m0, (4, 3), axis=(0, 1)), m1)


def test_elliptical_mask_clips_to_bounds():
    mask = elliptical_mask((40, 40), EyePair((2, 3), (14, 3)))
    assert mask.dims == (40, 40)
    assert mask.count() > 0


def _flat_image(value, size=90):
    return RgbImage(np.full((size, size, 3), value, dtype=np.uint8))


def test_extract_sample_flat_image_is_whole_ellipse():
    eyes = EyePair((35, 45), (55, 45))
    img = _flat_image((198, 140, 110))
    sample = extract_face_sample(img, eyes)
    ellipse = elliptical_mask((90, 90), eyes)
    assert np.array_equal(sample.mask.pixels, ellipse.pixels)
    assert len(sample) == ellipse.count()
    assert sample.source_dims == (90, 90)


def test_extract_sample_removes_dilated_stripe():
    # white base: the stripe step must clear the scaled-magnitude threshold
    eyes = EyePair((35, 45), (55, 45))
    arr = np.full((90, 90, 3), 255, dtype=np.uint8)
    arr[44:47, :] = 0
    sample = extract_face_sample(RgbImage(arr), eyes)
    ys = sample.pixels[:, 1]
    # stripe rows plus the 3-pixel edge/dilation margin are gone
    assert not np.any((ys >= 41) & (ys <= 49))
    assert np.any(ys == 38) and np.any(ys == 52)
    ellipse = elliptical_mask((90, 90), eyes).pixels
    assert not np.any(sample.mask.pixels & ~ellipse)


def test_extract_sample_empty_when_everything_is_edge():
    y = np.arange(60)
    stripes = (255 * ((y[:, None] // 2) % 2) * np.ones((1, 60))).astype(np.uint8)
    img = RgbImage(np.repeat(stripes[:, :, None], 3, axis=2))
    with pytest.raises(EmptyFaceSampleError):
        extract_face_sample(img, EyePair((20, 30), (40, 30)))


def test_face_sample_pixel_enumeration():
    mask = np.zeros((4, 5), dtype=bool)
    mask[1, 2] = mask[1, 4] = mask[3, 0] = True
    sample = FaceSample.from_mask(BinaryMask(mask))
    assert sample.pixels.tolist() == [[2, 1], [4, 1], [0, 3]]
    assert len(sample) == 3
    with pytest.raises(EmptyFaceSampleError):
        FaceSample.from_mask(BinaryMask(np.zeros((3, 3), dtype=bool)))


def test_union_samples():
    img = _flat_image((198, 140, 110), size=120)
    s1 = extract_face_sample(img, EyePair((30, 40), (50, 40)))
    s2 = extract_face_sample(img, EyePair((70, 70), (90, 70)))
    union = union_samples([s1, s2])
    assert np.array_equal(union.mask.pixels, s1.mask.pixels | s2.mask.pixels)
    assert len(union) == union.mask.count()

    other = extract_face_sample(_flat_image((198, 140, 110), size=60),
                                EyePair((20, 30), (40, 30)))
    with pytest.raises(ValueError):
        union_samples([s1, other])
    with pytest.raises(ValueError):
        union_samples([])


def test_load_annotations_groups_by_image(tmp_path):
    path = tmp_path / "annotations.json"
    path.write_text(json.dumps([
        {"image": "a.png", "left_eye": [10, 20], "right_eye": [30, 20]},
        {"image": "b.png", "left_eye": [5, 5], "right_eye": [9, 6]},
        {"image": "a.png", "left_eye": [50, 22], "right_eye": [70, 21]},
    ]))
    table = load_annotations(path)
    assert set(table) == {"a.png", "b.png"}
    assert len(table["a.png"]) == 2 and len(table["b.png"]) == 1
    assert table["a.png"][0].left == (10.0, 20.0)
    assert table["a.png"][1].right == (70.0, 21.0)


def test_load_annotations_rejects_bad_records(tmp_path):
    cases = [
        {"image": "a.png", "left_eye": [10, 20]},               # missing key
        {"image": "a.png", "left_eye": [1, 2, 3], "right_eye": [4, 5]},
        {"image": "a.png", "left_eye": [7, 7], "right_eye": [7, 7]},
        {"image": 3, "left_eye": [1, 2], "right_eye": [4, 5]},
    ]
    for idx, record in enumerate(cases):
        path = tmp_path / f"bad{idx}.json"
        path.write_text(json.dumps([record]))
        with pytest.raises(InvalidAnnotationError):
            load_annotations(path)
    not_a_list = tmp_path / "obj.json"
    not_a_list.write_text(json.dumps({"image": "a.png"}))
    with pytest.raises(InvalidAnnotationError):
        load_annotations(not_a_list)
