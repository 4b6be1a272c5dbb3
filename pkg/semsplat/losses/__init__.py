"""
semsplat Losses - photometric, semantic and aggregation terms

Every loss returns ``LossResult(value, grad)`` where ``grad`` has the shape
of the loss's first input.

Quick Start:
    ```python
    from semsplat.losses import LossParts, LossWeights, ce_loss, dssim_loss, l1_loss, total_loss

    l1 = l1_loss(out.color_image, view.image)
    ds = dssim_loss(out.color_image, view.image)
    ce = ce_loss(logits, view.labels)
    report = total_loss(LossParts(l1.value, ds.value, ce.value), LossWeights(a=0.5, b=0.1))
    ```
"""
from semsplat.config import LossWeights
from semsplat.losses.base import LossResult
from semsplat.losses.photometric import dssim_loss, gaussian_window, l1_loss, ssim_map
from semsplat.losses.semantic import IGNORE_INDEX, ce_loss, log_softmax, softmax
from semsplat.losses.aggregation import agg2d_loss, agg3d_loss, kl_pairs, pixel_neighbors, sample_indices
from semsplat.losses.total import CSV_COLUMNS, LossParts, LossReport, total_loss

__all__ = [
    "LossWeights",
    "LossResult",
    "dssim_loss",
    "gaussian_window",
    "l1_loss",
    "ssim_map",
    "IGNORE_INDEX",
    "ce_loss",
    "log_softmax",
    "softmax",
    "agg2d_loss",
    "agg3d_loss",
    "kl_pairs",
    "pixel_neighbors",
    "sample_indices",
    "CSV_COLUMNS",
    "LossParts",
    "LossReport",
    "total_loss",
]
