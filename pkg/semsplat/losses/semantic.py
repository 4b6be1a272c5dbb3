"""
Softmax cross-entropy over label maps, with an ignore value and an
optional pixel mask (the boundary-masked pseudo-label form).
"""
from typing import Optional

import numpy as np

from semsplat.exceptions import LabelOutOfRange, ShapeMismatch
from semsplat.losses.base import LossResult

IGNORE_INDEX = 255


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.exp(log_softmax(logits, axis=axis))


def check_labels(labels: np.ndarray, num_classes: int) -> None:
    bad = (labels != IGNORE_INDEX) & ((labels < 0) | (labels >= num_classes))
    if np.any(bad):
        raise LabelOutOfRange(int(labels[bad].flat[0]), num_classes)


def ce_loss(logits: np.ndarray, labels: np.ndarray, mask: Optional[np.ndarray] = None) -> LossResult:
    """
    Mean cross-entropy over scored pixels.

    A pixel is scored when its label is not 255 and, if ``mask`` is
    given, the mask is 1 there. With no scored pixels the loss is 0 with a
    zero gradient.

    Raises:
        ShapeMismatch: label or mask shape differs from the logits' pixel grid
        LabelOutOfRange: a label outside [0, C) other than 255
    """
    num_classes = logits.shape[-1]
    if labels.shape != logits.shape[:-1]:
        raise ShapeMismatch(
            f"labels shape {labels.shape} does not match logits {logits.shape[:-1]}",
            expected=logits.shape[:-1], actual=labels.shape,
        )
    if mask is not None and mask.shape != labels.shape:
        raise ShapeMismatch(
            f"mask shape {mask.shape} does not match labels {labels.shape}",
            expected=labels.shape, actual=mask.shape,
        )
    labels = labels.astype(np.int64)
    check_labels(labels, num_classes)

    scored = labels != IGNORE_INDEX
    if mask is not None:
        scored &= mask.astype(bool)
    count = int(np.count_nonzero(scored))
    grad = np.zeros_like(logits)
    if count == 0:
        return LossResult(0.0, grad)

    z = logits[scored]
    y = labels[scored]
    logp = log_softmax(z)
    value = -float(np.sum(logp[np.arange(count), y])) / count

    g = np.exp(logp)
    g[np.arange(count), y] -= 1.0
    grad[scored] = g / count
    return LossResult(value, grad)
