"""Confusion-matrix metrics, fixed-range baselines, and comparison runs.

Aggregate numbers are pixel-pooled: confusion counts are summed over the
dataset and metrics derived from the sums, which is not in general the mean
of the per-image metrics (per-image rows are kept for inspection). F-score
is the harmonic mean 2PR/(P+R); ratios that come out 0/0 are reported as 0
and flagged so degenerate images stay visible.

Two static-threshold baselines are included for comparison: skin iff
H in [0, 50] and S in [0.23, 0.68] (Sobottka-Pitas style), and the tighter
normalized-rg + HSV conjunction of Wang-Yuan (r in [0.36, 0.465], g in
[0.28, 0.363], H in [0, 50], S in [0.20, 0.68], V in [0.35, 1.0]).
"""

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import skin_model
from .colorspace import FeaturePair, rgb_to_hsv, select_pair
from .exceptions import (DegenerateModelError, EmptyFaceSampleError,
                         ImageDecodeError, InvalidAnnotationError)
from .face_region import (PreprocessConfig, extract_face_sample,
                          load_annotations, union_samples)
from .imaging import BinaryMask, load_mask_png, load_png
from .skin_model import DetectorParams, FusionMode

__all__ = ["Confusion", "MetricSet", "Baseline", "ImageEval", "EvalReport",
           "DatasetItem", "Variant", "confusion", "metrics", "f_score",
           "classify_baseline", "load_dataset", "run_comparison",
           "build_report", "reports_to_csv", "format_report_table",
           "report_payload"]


@dataclass(frozen=True)
class Confusion:
    """Pixel counts of a binary prediction against ground truth."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other):
        return Confusion(self.tp + other.tp, self.fp + other.fp,
                         self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class MetricSet:
    """Derived rates; ``undefined`` names the ratios that were 0/0."""

    accuracy: float
    precision: float
    recall: float
    f_score: float
    false_positive_rate: float
    false_negative_rate: float
    undefined: tuple = ()

    def as_dict(self):
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
            "false_positive_rate": self.false_positive_rate,
            "false_negative_rate": self.false_negative_rate,
            "undefined": list(self.undefined),
        }


def confusion(pred, truth):
    """Tally a predicted mask against a truth mask of the same size."""
    if pred.pixels.shape != truth.pixels.shape:
        raise ValueError(f"mask dimensions differ: {pred.dims} vs {truth.dims}")
    p = pred.pixels
    t = truth.pixels
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = p.size - tp - fp - fn
    return Confusion(tp=tp, fp=fp, tn=tn, fn=fn)


def f_score(precision, recall):
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def metrics(conf):
    """Accuracy, precision, recall, F-score, FPR and FNR of a confusion."""
    if conf.total == 0:
        raise ValueError("empty confusion: no pixels were evaluated")
    undefined = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    precision = ratio(conf.tp, conf.tp + conf.fp, "precision")
    recall = ratio(conf.tp, conf.tp + conf.fn, "recall")
    if precision + recall == 0:
        undefined.append("f_score")
    return MetricSet(
        accuracy=(conf.tp + conf.tn) / conf.total,
        precision=precision,
        recall=recall,
        f_score=f_score(precision, recall),
        false_positive_rate=ratio(conf.fp, conf.fp + conf.tn, "false_positive_rate"),
        false_negative_rate=ratio(conf.fn, conf.fn + conf.tp, "false_negative_rate"),
        undefined=tuple(undefined),
    )


class Baseline(enum.Enum):
    """Fixed-range reference classifiers."""

    SOBOTTKA_HS = "sobottka_hs"
    WANG_YUAN = "wang_yuan"

    @property
    def token(self):
        return self.value

    @classmethod
    def from_token(cls, token):
        try:
            return cls(token.strip().lower())
        except ValueError:
            valid = ", ".join(b.value for b in cls)
            raise ValueError(f"unknown baseline {token!r} (valid: {valid})") from None


def classify_baseline(img, baseline):
    """Apply a static-threshold baseline to an image (closed intervals)."""
    h, s, v = rgb_to_hsv(img)
    if baseline is Baseline.SOBOTTKA_HS:
        skin = (h >= 0.0) & (h <= 50.0) & (s >= 0.23) & (s <= 0.68)
        return BinaryMask._wrap(skin)
    rgb = img.pixels.astype(np.float64)
    total = rgb.sum(axis=2)
    safe = np.where(total > 0, total, 1.0)
    r = rgb[:, :, 0] / safe
    g = rgb[:, :, 1] / safe
    skin = ((total > 0)
            & (r >= 0.36) & (r <= 0.465)
            & (g >= 0.28) & (g <= 0.363)
            & (h >= 0.0) & (h <= 50.0)
            & (s >= 0.20) & (s <= 0.68)
            & (v >= 0.35) & (v <= 1.0))
    return BinaryMask._wrap(skin)


@dataclass(frozen=True)
class Variant:
    """One report row: a feature pair, a fusion mode, or a baseline."""

    kind: str    # "feature" | "mode" | "baseline"
    token: str

    def __post_init__(self):
        if self.kind not in ("feature", "mode", "baseline"):
            raise ValueError(f"unknown variant kind {self.kind!r}")
        # normalize + validate the token
        normalized = {
            "feature": lambda t: FeaturePair.from_token(t).token,
            "mode": lambda t: FusionMode.from_token(t).token,
            "baseline": lambda t: Baseline.from_token(t).token,
        }[self.kind](self.token)
        object.__setattr__(self, "token", normalized)

    @property
    def label(self):
        return self.token


@dataclass(frozen=True)
class ImageEval:
    image_id: str
    confusion: Confusion
    metrics: MetricSet


@dataclass(frozen=True)
class EvalReport:
    """Per-variant evaluation: per-image rows plus pixel-pooled aggregate."""

    label: str
    per_image: tuple
    skipped: tuple            # (image_id, reason) pairs
    aggregate: Confusion
    aggregate_metrics: MetricSet


def build_report(label, per_image, skipped=()):
    agg = Confusion()
    for entry in per_image:
        agg = agg + entry.confusion
    return EvalReport(label=label, per_image=tuple(per_image),
                      skipped=tuple(skipped), aggregate=agg,
                      aggregate_metrics=metrics(agg))


@dataclass(frozen=True)
class DatasetItem:
    """One dataset entry: image, optional truth mask, annotated eyes."""

    image_id: str
    image_path: Path
    truth_path: Path | None
    eyes: tuple


def load_dataset(root):
    """Scan the dataset layout ``root/images/``, ``root/truth/``,
    ``root/annotations.json`` into a list of :class:`DatasetItem`."""
    root = Path(root)
    images_dir = root / "images"
    truth_dir = root / "truth"
    if not images_dir.is_dir():
        raise FileNotFoundError(f"no images/ directory under {root}")
    ann_path = root / "annotations.json"
    annotations = load_annotations(ann_path) if ann_path.exists() else {}
    items = []
    for image_path in sorted(images_dir.glob("*.png")):
        truth_path = truth_dir / image_path.name
        if not truth_path.exists():
            truth_path = truth_dir / (image_path.stem + ".png")
        eyes = annotations.get(image_path.name, [])
        items.append(DatasetItem(
            image_id=image_path.name,
            image_path=image_path,
            truth_path=truth_path if truth_path.exists() else None,
            eyes=tuple(eyes),
        ))
    return items


def _predictions_for_image(item, variants, params, cfg, mode_pair):
    """Predicted masks for every variant of one image.

    The face sample and per-feature detectors are shared across variants;
    a degenerate sample or model yields blank masks, mirroring
    :func:`skin_model.detect`.
    """
    img = load_png(item.image_path)
    blank = BinaryMask.blank(img.width, img.height)

    feature_tokens = {v.token for v in variants if v.kind == "feature"}
    if any(v.kind == "mode" for v in variants):
        feature_tokens.add(mode_pair.token)

    sample = None
    if feature_tokens and item.eyes:
        try:
            sample = union_samples(
                [extract_face_sample(img, e, cfg) for e in item.eyes])
        except EmptyFaceSampleError:
            sample = None

    planes = {}
    detectors = {}
    for token in sorted(feature_tokens):
        pair = FeaturePair.from_token(token)
        planes[token] = select_pair(img, pair)
        if sample is None:
            detectors[token] = None
            continue
        try:
            detectors[token] = skin_model.fit_detector(planes[token], sample, params)
        except DegenerateModelError:
            detectors[token] = None

    preds = {}
    for v in variants:
        if v.kind == "baseline":
            preds[v] = classify_baseline(img, Baseline.from_token(v.token))
            continue
        token = v.token if v.kind == "feature" else mode_pair.token
        mode = FusionMode.FUSION if v.kind == "feature" else FusionMode.from_token(v.token)
        det = detectors[token]
        preds[v] = blank if det is None else skin_model.classify(det, planes[token], mode)
    return preds


def run_comparison(items, variants, params=None, cfg=None,
                   mode_pair=FeaturePair.IBY, jobs=1):
    """Evaluate every variant over a dataset; one report per variant.

    Images without a readable truth mask (or with an unusable annotation or
    mismatched truth size) are recorded under ``skipped`` and excluded from
    the aggregates of every variant.
    """
    if not variants:
        raise ValueError("no variants requested")
    params = params or DetectorParams()
    cfg = cfg or PreprocessConfig()

    def evaluate(item):
        if item.truth_path is None:
            return item.image_id, None, "missing truth mask"
        try:
            truth = load_mask_png(item.truth_path)
            preds = _predictions_for_image(item, variants, params, cfg, mode_pair)
            confusions = {v: confusion(preds[v], truth) for v in variants}
        except (ImageDecodeError, InvalidAnnotationError, ValueError) as exc:
            return item.image_id, None, str(exc)
        return item.image_id, confusions, None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(evaluate, items))
    else:
        results = [evaluate(item) for item in items]

    skipped = [(image_id, reason) for image_id, conf, reason in results
               if conf is None]
    reports = []
    for v in variants:
        rows = [ImageEval(image_id, conf[v], metrics(conf[v]))
                for image_id, conf, _ in results if conf is not None]
        reports.append(build_report(v.label, rows, skipped))
    return reports


CSV_HEADER = "variant,accuracy,f_score,precision,recall,fpr,fnr"


def reports_to_csv(reports):
    """Aggregate rows in the fixed column vocabulary, one line per variant."""
    lines = [CSV_HEADER]
    for rep in reports:
        m = rep.aggregate_metrics
        lines.append(",".join([rep.label] + [
            repr(x) for x in (m.accuracy, m.f_score, m.precision, m.recall,
                              m.false_positive_rate, m.false_negative_rate)
        ]))
    return "\n".join(lines) + "\n"


def format_report_table(reports):
    """Aligned-column text table of the aggregate metrics."""
    header = ("variant", "accuracy", "f_score", "precision", "recall",
              "fpr", "fnr", "skipped")
    rows = [header]
    for rep in reports:
        m = rep.aggregate_metrics
        rows.append((rep.label,) + tuple(
            f"{x:.4f}" for x in (m.accuracy, m.f_score, m.precision, m.recall,
                                 m.false_positive_rate, m.false_negative_rate)
        ) + (str(len(rep.skipped)),))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in rows
    ) + "\n"


def _confusion_dict(conf):
    return {"tp": conf.tp, "fp": conf.fp, "tn": conf.tn, "fn": conf.fn}


def report_payload(reports, config_echo):
    """JSON-ready payload for a set of reports, embedding the effective
    configuration for reproducibility."""
    return {
        "config": dict(config_echo),
        "variants": [
            {
                "variant": rep.label,
                "aggregate": {**_confusion_dict(rep.aggregate),
                              **rep.aggregate_metrics.as_dict()},
                "per_image": [
                    {"image": e.image_id, **_confusion_dict(e.confusion),
                     **e.metrics.as_dict()}
                    for e in rep.per_image
                ],
                "skipped": [{"image": image_id, "reason": reason}
                            for image_id, reason in rep.skipped],
            }
            for rep in reports
        ],
    }
