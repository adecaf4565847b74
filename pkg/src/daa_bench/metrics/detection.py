"""Detection metrics: IoU, greedy matching, precision/recall and average precision."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..config.settings import MetricsConfig
from ..core.errors import EmptyInputError
from ..core.models import BoundingBox, Conditions

COCO_IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union in normalized image coordinates."""
    ax0, ay0, ax1, ay1 = a.corners
    bx0, by0, bx1, by1 = b.corners
    inter_w = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    inter_h = max(0.0, min(ay1, by1) - max(ay0, by0))
    intersection = inter_w * inter_h
    union = a.area + b.area - intersection
    return intersection / union if union > 0.0 else 0.0


class Matching(BaseModel):
    """One image's predictions matched one-to-one against its ground truth.

    ``outcomes`` lists (confidence, true positive) per prediction in the
    order matching visited them: descending confidence, ties by input order.
    """

    pairs: tuple[tuple[int, int], ...] = Field(
        (), description="(prediction index, ground truth index)"
    )
    outcomes: tuple[tuple[float, bool], ...] = ()
    n_ground_truth: int = Field(0, ge=0)

    model_config = ConfigDict(frozen=True)

    @property
    def true_positives(self) -> int:
        return len(self.pairs)

    @property
    def false_positives(self) -> int:
        return len(self.outcomes) - len(self.pairs)

    @property
    def false_negatives(self) -> int:
        return self.n_ground_truth - len(self.pairs)


def match_detections(
    predictions: Sequence[BoundingBox],
    ground_truth: Sequence[BoundingBox],
    iou_threshold: float = 0.5,
) -> Matching:
    """Greedy matching by descending confidence.

    Each prediction takes the unmatched ground truth of highest IoU, provided
    that IoU reaches ``iou_threshold``; otherwise it is a false positive.
    Only boxes of the same class match.
    """
    if not 0.0 < iou_threshold <= 1.0:
        msg = f"IoU threshold must lie in (0, 1], got {iou_threshold}"
        raise ValueError(msg)
    order = sorted(range(len(predictions)), key=lambda i: -predictions[i].confidence)
    taken: set[int] = set()
    pairs = []
    outcomes = []
    for p in order:
        pred = predictions[p]
        best, best_iou = None, iou_threshold
        for g, truth in enumerate(ground_truth):
            if g in taken or truth.class_id != pred.class_id:
                continue
            overlap = iou(pred, truth)
            if overlap >= best_iou and (best is None or overlap > best_iou):
                best, best_iou = g, overlap
        if best is not None:
            taken.add(best)
            pairs.append((p, best))
        outcomes.append((pred.confidence, best is not None))
    return Matching(
        pairs=tuple(pairs), outcomes=tuple(outcomes), n_ground_truth=len(ground_truth)
    )


def _total_ground_truth(matchings: Sequence[Matching]) -> int:
    total = sum(m.n_ground_truth for m in matchings)
    if total == 0:
        msg = "Precision, recall and AP need at least one ground truth box"
        raise EmptyInputError(msg)
    return total


def precision_recall(
    matchings: Sequence[Matching], confidence_threshold: float = 0.0
) -> tuple[float, float]:
    """Pooled precision and recall over predictions at or above the threshold.

    With no predictions left, precision is 1.0.
    """
    total = _total_ground_truth(matchings)
    kept = [
        tp
        for m in matchings
        for confidence, tp in m.outcomes
        if confidence >= confidence_threshold
    ]
    tp = sum(kept)
    precision = tp / len(kept) if kept else 1.0
    return precision, tp / total


def pr_curve(matchings: Sequence[Matching]) -> tuple[np.ndarray, np.ndarray]:
    """(recall, precision) after each prediction in descending confidence order."""
    total = _total_ground_truth(matchings)
    outcomes = [o for m in matchings for o in m.outcomes]
    outcomes.sort(key=lambda o: -o[0])
    hits = np.array([tp for _, tp in outcomes], dtype=float)
    cum_tp = np.cumsum(hits)
    cum_fp = np.cumsum(1.0 - hits)
    recall = cum_tp / total
    precision = cum_tp / np.maximum(cum_tp + cum_fp, 1.0)
    return recall, precision


def average_precision(
    matchings: Sequence[Matching],
    method: Literal["all_point", "101_point"] = "all_point",
) -> float:
    """Area under the interpolated precision-recall curve.

    ``all_point`` integrates the precision envelope at every recall change;
    ``101_point`` averages the envelope at recall 0, 0.01, ..., 1.
    """
    recall, precision = pr_curve(matchings)
    if recall.size == 0:
        return 0.0
    if method == "101_point":
        levels = np.linspace(0.0, 1.0, 101)
        envelope = [
            precision[recall >= r].max() if np.any(recall >= r) else 0.0
            for r in levels
        ]
        return float(np.mean(envelope))
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[1.0], precision, [0.0]])
    mpre = np.flip(np.maximum.accumulate(np.flip(mpre)))
    changes = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changes + 1] - mrec[changes]) * mpre[changes + 1]))


class ImageEvaluation(BaseModel):
    """Ground truth and predictions for one image, with its slicing metadata."""

    stem: str
    conditions: Conditions
    intruder_range: float = Field(..., gt=0.0)
    vertical_offset: float = 0.0
    ground_truth: tuple[BoundingBox, ...] = ()
    predictions: tuple[BoundingBox, ...] = ()

    model_config = ConfigDict(frozen=True)


class DetectionSummary(BaseModel):
    """Precision, recall and mAP of a set of images."""

    n_images: int = Field(..., ge=0)
    n_ground_truth: int = Field(..., ge=0)
    precision: float | None = None
    recall: float | None = None
    map: float | None = None

    model_config = ConfigDict(frozen=True)


def mean_average_precision(
    images: Sequence[ImageEvaluation], config: MetricsConfig | None = None
) -> float:
    """AP averaged over ground-truth classes, and over IoU 0.50:0.95 in coco mode."""
    config = config or MetricsConfig()
    if config.iou_mode == "coco":
        thresholds = COCO_IOU_THRESHOLDS
    else:
        thresholds = (config.iou_threshold,)
    classes = sorted({box.class_id for image in images for box in image.ground_truth})
    if not classes:
        msg = "mAP needs at least one ground truth box"
        raise EmptyInputError(msg)
    scores = []
    for class_id in classes:
        for threshold in thresholds:
            matchings = [
                match_detections(
                    [b for b in image.predictions if b.class_id == class_id],
                    [b for b in image.ground_truth if b.class_id == class_id],
                    threshold,
                )
                for image in images
            ]
            scores.append(average_precision(matchings, config.ap_method))
    return float(np.mean(scores))


def evaluate_detections(
    images: Sequence[ImageEvaluation], config: MetricsConfig | None = None
) -> DetectionSummary:
    """Pooled metrics; all None when the images hold no ground truth."""
    config = config or MetricsConfig()
    n_ground_truth = sum(len(image.ground_truth) for image in images)
    if n_ground_truth == 0:
        return DetectionSummary(n_images=len(images), n_ground_truth=0)
    matchings = [
        match_detections(image.predictions, image.ground_truth, config.iou_threshold)
        for image in images
    ]
    precision, recall = precision_recall(matchings, config.confidence_threshold)
    return DetectionSummary(
        n_images=len(images),
        n_ground_truth=n_ground_truth,
        precision=precision,
        recall=recall,
        map=mean_average_precision(images, config),
    )
