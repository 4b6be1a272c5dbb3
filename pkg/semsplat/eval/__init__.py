"""
semsplat Eval - segmentation metrics, PCA feature images and render timing

Quick Start:
    ```python
    from semsplat.eval import miou, pca_visualize

    result = miou(predicted_maps, oracle_maps, num_classes=4)
    print(result.per_class, result.mean)

    image = pca_visualize(output.feature_map)   # H x W x 3 in [0, 1]
    ```
"""
from semsplat.eval.metrics import (
    ConfusionMatrix,
    MiouResult,
    ViewConsistencyReport,
    confusion_matrix,
    iou_from_confusion,
    miou,
    per_view_report,
)
from semsplat.eval.pca import PcaBasis, fit_pca_basis, pca_visualize
from semsplat.eval.timing import TimingReport, timing_report
from semsplat.eval.predict import evaluate_views, predict_labels
from semsplat.eval.report import write_class_iou, write_summary, write_timing, write_view_report

__all__ = [
    "ConfusionMatrix",
    "MiouResult",
    "ViewConsistencyReport",
    "confusion_matrix",
    "iou_from_confusion",
    "miou",
    "per_view_report",
    "PcaBasis",
    "fit_pca_basis",
    "pca_visualize",
    "TimingReport",
    "timing_report",
    "evaluate_views",
    "predict_labels",
    "write_class_iou",
    "write_summary",
    "write_timing",
    "write_view_report",
]
