"""
Segmentation metrics: confusion matrix, per-class IoU and mIoU, and a
per-view consistency summary.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from semsplat.exceptions import EmptyInput, LabelOutOfRange, ShapeMismatch
from semsplat.losses.semantic import IGNORE_INDEX, check_labels

logger = logging.getLogger(__name__)

LabelMaps = Union[np.ndarray, Sequence[np.ndarray]]


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """C x C counts, rows = ground truth, columns = prediction"""
    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def true_positives(self) -> np.ndarray:
        return np.diag(self.counts)

    @property
    def false_positives(self) -> np.ndarray:
        return self.counts.sum(axis=0) - self.true_positives

    @property
    def false_negatives(self) -> np.ndarray:
        return self.counts.sum(axis=1) - self.true_positives

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)


@dataclass(frozen=True, eq=False)
class MiouResult:
    """Per-class IoU (NaN for classes absent from both maps) and their mean"""
    per_class: np.ndarray
    present: np.ndarray
    confusion: ConfusionMatrix

    @property
    def mean(self) -> float:
        if not np.any(self.present):
            return float("nan")
        return float(np.mean(self.per_class[self.present]))

    def to_frame(self, class_names: Sequence[str] = ()) -> pd.DataFrame:
        names = [class_names[c] if c < len(class_names) else str(c) for c in range(len(self.per_class))]
        return pd.DataFrame({"class": names, "iou": self.per_class})


def _as_list(maps: LabelMaps) -> List[np.ndarray]:
    if isinstance(maps, np.ndarray) and maps.ndim == 2:
        return [maps]
    return [np.asarray(m) for m in maps]


def confusion_matrix(predictions: LabelMaps, ground_truth: LabelMaps, num_classes: int) -> ConfusionMatrix:
    """
    Count (gt, pred) pairs over every pixel whose ground truth is not 255.

    Raises:
        ShapeMismatch: map counts or shapes differ
        LabelOutOfRange: a label outside [0, C), or 255 predicted on a scored pixel
    """
    preds, gts = _as_list(predictions), _as_list(ground_truth)
    if len(preds) != len(gts):
        raise ShapeMismatch(
            f"{len(preds)} prediction maps for {len(gts)} ground-truth maps",
            expected=len(gts), actual=len(preds),
        )
    counts = np.zeros(num_classes * num_classes, dtype=np.int64)
    for pred, gt in zip(preds, gts):
        if pred.shape != gt.shape:
            raise ShapeMismatch(
                f"prediction shape {pred.shape} does not match ground truth {gt.shape}",
                expected=gt.shape, actual=pred.shape,
            )
        gt = gt.astype(np.int64)
        pred = pred.astype(np.int64)
        check_labels(gt, num_classes)
        scored = gt != IGNORE_INDEX
        check_labels(pred[scored], num_classes)
        if np.any(pred[scored] == IGNORE_INDEX):
            raise LabelOutOfRange(IGNORE_INDEX, num_classes)
        counts += np.bincount(gt[scored] * num_classes + pred[scored], minlength=num_classes * num_classes)
    return ConfusionMatrix(counts.reshape(num_classes, num_classes))


def iou_from_confusion(confusion: ConfusionMatrix) -> MiouResult:
    tp = confusion.true_positives
    denom = tp + confusion.false_positives + confusion.false_negatives
    present = denom > 0
    per_class = np.full(confusion.num_classes, np.nan)
    per_class[present] = tp[present] / denom[present]
    return MiouResult(per_class, present, confusion)


def miou(predictions: LabelMaps, ground_truth: LabelMaps, num_classes: int) -> MiouResult:
    """
    Intersection over union per class, TP / (TP + FP + FN), pooled over
    all maps. Classes absent from both ground truth and prediction are
    left out of the mean.

    Args:
        predictions: one H x W label map or a sequence of them
        ground_truth: matching maps; 255 marks unscored pixels
        num_classes: C

    Returns:
        MiouResult with ``per_class`` and ``mean``
    """
    return iou_from_confusion(confusion_matrix(predictions, ground_truth, num_classes))


@dataclass
class ViewConsistencyReport:
    per_view: pd.DataFrame
    overall: MiouResult

    @property
    def mean(self) -> float:
        return float(self.per_view["miou"].mean())

    @property
    def std(self) -> float:
        return float(self.per_view["miou"].std(ddof=0))

    def summary(self) -> Dict[str, float]:
        return {
            "miou": self.overall.mean,
            "view_miou_mean": self.mean,
            "view_miou_std": self.std,
            "num_views": int(len(self.per_view)),
        }


def per_view_report(
        predictions: Mapping[str, np.ndarray],
        ground_truth: Mapping[str, np.ndarray],
        num_classes: int,
) -> ViewConsistencyReport:
    """
    mIoU per view plus the pooled score; the spread of the per-view
    scores summarises cross-view consistency.

    Raises:
        EmptyInput: no views
        ShapeMismatch: the two mappings name different views
    """
    if not ground_truth:
        raise EmptyInput("no views to evaluate")
    missing = sorted(set(ground_truth) ^ set(predictions))
    if missing:
        raise ShapeMismatch(f"view sets differ: {', '.join(missing)}")

    rows = []
    total = ConfusionMatrix(np.zeros((num_classes, num_classes), dtype=np.int64))
    for view_id in sorted(ground_truth):
        confusion = confusion_matrix(predictions[view_id], ground_truth[view_id], num_classes)
        total = total + confusion
        rows.append({"view_id": view_id, "miou": iou_from_confusion(confusion).mean})
    report = ViewConsistencyReport(pd.DataFrame(rows, columns=["view_id", "miou"]), iou_from_confusion(total))
    logger.debug("evaluated %d views: mIoU %.4f", len(rows), report.overall.mean)
    return report
