"""Deterministic synthetic scenes: skin-toned faces on cluttered backgrounds.

Real benchmark footage is out of reach for an offline test run, so these
scenes stand in for it: every image carries one or two face ellipses with
marked eyes, a same-toned limb patch away from any face, non-skin clutter,
a global illumination scale, and mild per-pixel noise. Ground truth is the
painted geometry, which makes recall and false-positive bookkeeping exact.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .face_region import EyePair
from .imaging import BinaryMask, RgbImage, save_mask_png, save_png

__all__ = ["Scene", "make_scene", "generate_suite", "SUITE_SIZE"]

WIDTH = 160
HEIGHT = 120
SUITE_SIZE = 20

_SKIN_BASE = (204, 142, 112)
_EYE_COLOR = (36, 26, 24)
_BACKDROPS = ((34, 72, 46), (40, 60, 96), (70, 70, 74), (28, 88, 104),
              (96, 72, 110))
_CLUTTER = ((12, 120, 40), (30, 40, 150), (150, 150, 160), (10, 90, 90),
            (120, 30, 140), (200, 200, 60), (60, 160, 190), (90, 50, 20))


@dataclass(frozen=True)
class Scene:
    image: RgbImage
    truth: BinaryMask
    eyes: tuple


def _ellipse(cx, cy, sa, sb):
    ys, xs = np.ogrid[0:HEIGHT, 0:WIDTH]
    return ((xs - cx) / sa) ** 2 + ((ys - cy) / sb) ** 2 <= 1.0


def _add_face(canvas, truth, cx, cy, tone):
    """Paint a face ellipse with two dark eye dots; truth gains the skin."""
    face = _ellipse(cx, cy, 22.0, 27.0)
    canvas[face] = tone
    eye_y = cy - 8.0
    pair = EyePair((cx - 10.0, eye_y), (cx + 10.0, eye_y))
    for ex, ey in (pair.left, pair.right):
        dot = _ellipse(ex, ey, 1.0, 1.0)
        canvas[dot] = _EYE_COLOR
        face &= ~dot
    truth |= face
    return pair


def make_scene(rng, two_faces=False, near_skin_clutter=False):
    """One synthetic scene drawn from ``rng``.

    Clutter is painted first so faces and the limb always sit on top; the
    limb band lies below every face zone, so truth regions never collide.
    """
    canvas = np.empty((HEIGHT, WIDTH, 3), dtype=np.uint8)
    canvas[:, :] = _BACKDROPS[int(rng.integers(len(_BACKDROPS)))]
    truth = np.zeros((HEIGHT, WIDTH), dtype=bool)
    tone = np.clip(np.array(_SKIN_BASE, dtype=np.int16)
                   + rng.integers(-6, 7, size=3), 0, 255).astype(np.uint8)

    for _ in range(int(rng.integers(5, 10))):
        color = _CLUTTER[int(rng.integers(len(_CLUTTER)))]
        x = float(rng.integers(0, WIDTH))
        y = float(rng.integers(0, HEIGHT))
        size = float(rng.integers(6, 26))
        if rng.integers(2):
            canvas[_ellipse(x, y, size, size * 0.7)] = color
        else:
            x0, y0 = int(x), int(y)
            canvas[y0:y0 + int(size), x0:x0 + int(size) + 8] = color
    if near_skin_clutter:
        shade = np.clip(tone.astype(np.int16)
                        + rng.integers(2, 7, size=3), 0, 255).astype(np.uint8)
        x0 = int(rng.integers(8, WIDTH - 30))
        canvas[6:22, x0:x0 + 24] = shade

    eyes = [_add_face(canvas, truth, 42.0 + float(rng.integers(-3, 4)),
                      47.0 + float(rng.integers(-3, 4)), tone)]
    if two_faces:
        eyes.append(_add_face(canvas, truth, 116.0 + float(rng.integers(-3, 4)),
                              46.0 + float(rng.integers(-3, 4)), tone))

    limb_w = int(rng.integers(26, 39))
    limb_h = int(rng.integers(12, 17))
    x0 = int(rng.integers(14, WIDTH - limb_w - 6))
    y0 = int(rng.integers(95, 103))
    canvas[y0:y0 + limb_h, x0:x0 + limb_w] = tone
    truth[y0:y0 + limb_h, x0:x0 + limb_w] = True

    scale = rng.uniform(0.9, 1.1)
    lit = np.floor(canvas.astype(np.float64) * scale + 0.5)
    noisy = lit + rng.integers(-3, 4, size=canvas.shape)
    pixels = np.clip(noisy, 0, 255).astype(np.uint8)
    return Scene(image=RgbImage(pixels), truth=BinaryMask._wrap(truth),
                 eyes=tuple(eyes))


def generate_suite(root, count=SUITE_SIZE, seed=7):
    """Write a dataset (images/, truth/, annotations.json) under ``root``.

    Every fifth image carries two faces so multi-annotation pooling gets
    exercised; every fourth adds clutter a few levels off the skin tone.
    Returns the image file names in order.
    """
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "truth").mkdir(parents=True, exist_ok=True)
    names = []
    records = []
    for idx in range(count):
        rng = np.random.default_rng((seed, idx))
        scene = make_scene(rng, two_faces=(idx % 5 == 3),
                           near_skin_clutter=(idx % 4 == 1))
        name = f"synth_{idx:02d}.png"
        save_png(scene.image, root / "images" / name)
        save_mask_png(scene.truth, root / "truth" / name)
        for pair in scene.eyes:
            records.append({"image": name,
                            "left_eye": list(pair.left),
                            "right_eye": list(pair.right)})
        names.append(name)
    with open(root / "annotations.json", "w", encoding="utf-8") as fh:
        json.dump(records, fh, indent=2)
        fh.write("\n")
    return names
