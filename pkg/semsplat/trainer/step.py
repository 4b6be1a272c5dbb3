"""
One optimization step: render, decode, losses, backward, Adam.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from semsplat.cloud.gaussians import GaussianCloud
from semsplat.config import TrainConfig
from semsplat.decoder.mlp import SemanticDecoder, decode, decode_backward
from semsplat.losses.aggregation import agg2d_loss, agg3d_loss
from semsplat.losses.photometric import dssim_loss, l1_loss
from semsplat.losses.semantic import ce_loss
from semsplat.losses.total import LossParts, LossReport, total_loss
from semsplat.rasterizer.backward import render_backward
from semsplat.rasterizer.blending import render
from semsplat.rasterizer.types import GradientBundle, RenderOutput
from semsplat.spatial_index.index import SpatialIndex
from semsplat.trainer.adam import AdamState, learning_rates
from semsplat.trainer.scene import View

AGG2D_STREAM = 2
AGG3D_STREAM = 3
SPLIT_STREAM = 4


def step_seed(seed: int, step: int, stream: int) -> int:
    """Independent reproducible seed per (run seed, step, purpose)"""
    return int(np.random.SeedSequence([seed, stream, step]).generate_state(1)[0])


@dataclass
class StepResult:
    report: LossReport
    output: RenderOutput
    grads: GradientBundle


def train_step(
        cloud: GaussianCloud,
        decoder: SemanticDecoder,
        view: View,
        config: TrainConfig,
        adam: AdamState,
        index: Optional[SpatialIndex] = None,
        step: int = 0,
) -> StepResult:
    """
    Supervision follows the view: dense cross-entropy on ground-truth
    views, boundary-masked cross-entropy on pseudo-labeled views, none
    otherwise. Aggregation terms are evaluated only when their weight is
    positive.

    Raises:
        NonFiniteLoss: any loss term is NaN or infinite
    """
    weights = config.weights
    out = render(cloud, view.camera, config.tile_size, config.threads, config.min_transmittance)
    H, W = out.height, out.width

    l1 = l1_loss(out.color_image, view.image)
    ds = dssim_loss(out.color_image, view.image)

    logits = decode(out.feature_map, decoder)
    if view.has_gt:
        ce = ce_loss(logits, view.labels)
    elif view.has_pseudo:
        ce = ce_loss(logits, view.pseudo_labels, mask=view.boundary)
    else:
        ce = ce_loss(logits, np.full((H, W), 255, dtype=np.uint8))

    agg2d_value, agg2d_grad = 0.0, None
    if weights.a > 0.0:
        m = min(config.agg2d_samples, (H * W) // (config.k + 1))
        agg2d = agg2d_loss(out.feature_map, m, config.k, step_seed(config.seed, step, AGG2D_STREAM))
        agg2d_value, agg2d_grad = agg2d.value, agg2d.grad

    agg3d_value, agg3d_grad = 0.0, None
    if weights.b > 0.0 and index is not None and cloud.num_points > config.k:
        agg3d = agg3d_loss(
            cloud.features, index, config.agg3d_samples, config.k, step_seed(config.seed, step, AGG3D_STREAM)
        )
        agg3d_value, agg3d_grad = agg3d.value, agg3d.grad

    report = total_loss(LossParts(l1.value, ds.value, ce.value, agg2d_value, agg3d_value), weights, step)

    d_features, decoder_grads = decode_backward(out.feature_map, decoder, ce.grad)
    if agg2d_grad is not None:
        d_features = d_features + weights.a * agg2d_grad
    grads = render_backward(cloud, view.camera, out, l1.grad + ds.grad, d_features, config.threads)
    if agg3d_grad is not None:
        grads.features += weights.b * agg3d_grad
    grads.decoder = decoder_grads

    adam.apply(cloud, decoder, grads, learning_rates(config.lr, step, config.total_steps))
    return StepResult(report, out, grads)
