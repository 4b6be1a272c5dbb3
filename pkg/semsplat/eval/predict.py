"""
Segmentation by rendering: argmax over decoded logits of the splatted
feature map.
"""
from typing import Mapping, Sequence, Tuple

import numpy as np

from semsplat.camera.types import Camera
from semsplat.cloud.gaussians import GaussianCloud
from semsplat.decoder.mlp import SemanticDecoder, decode
from semsplat.eval.metrics import ViewConsistencyReport, per_view_report
from semsplat.rasterizer.blending import DEFAULT_TILE_SIZE, render
from semsplat.rasterizer.types import RenderOutput


def predict_labels(
        cloud: GaussianCloud,
        decoder: SemanticDecoder,
        camera: Camera,
        tile_size: int = DEFAULT_TILE_SIZE,
        threads: int = 1,
) -> Tuple[np.ndarray, RenderOutput]:
    """H x W uint8 class map and the render it came from; ties go to the lower class"""
    output = render(cloud, camera, tile_size=tile_size, threads=threads)
    logits = decode(output.feature_map, decoder)
    return np.argmax(logits, axis=-1).astype(np.uint8), output


def evaluate_views(
        cloud: GaussianCloud,
        decoder: SemanticDecoder,
        cameras: Sequence[Camera],
        labels: Mapping[str, np.ndarray],
        view_ids: Sequence[str],
        threads: int = 1,
) -> ViewConsistencyReport:
    """Render each camera, predict, and score against ``labels`` keyed by view id"""
    predictions = {}
    for camera, view_id in zip(cameras, view_ids):
        predictions[view_id], _ = predict_labels(cloud, decoder, camera, threads=threads)
    return per_view_report(predictions, {v: labels[v] for v in view_ids}, decoder.num_classes)
