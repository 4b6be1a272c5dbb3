"""
Adaptive density control: clone small high-gradient points, split large
ones, prune nearly transparent ones.
"""
import logging
from dataclasses import dataclass

import numpy as np

from semsplat.camera.geometry import quaternion_to_rotation
from semsplat.cloud.gaussians import GaussianCloud, activate, clamp_log_scales, normalize_quaternions
from semsplat.config import DensifyConfig

logger = logging.getLogger(__name__)

SPLIT_CHILDREN = 2
# children are placed within this many standard deviations of the parent
SPLIT_SAMPLE_RADIUS = 3.0


class DensityStats:
    """Screen-space positional gradient norms accumulated between densify events"""

    def __init__(self, num_points: int):
        self.grad_sum = np.zeros(num_points, dtype=np.float64)
        self.visible_count = np.zeros(num_points, dtype=np.int64)

    def update(self, means2d_grad: np.ndarray, visible: np.ndarray) -> None:
        norms = np.linalg.norm(means2d_grad, axis=-1)
        self.grad_sum[visible] += norms[visible]
        self.visible_count[visible] += 1

    def mean_grad(self) -> np.ndarray:
        out = np.zeros_like(self.grad_sum)
        seen = self.visible_count > 0
        out[seen] = self.grad_sum[seen] / self.visible_count[seen]
        return out

    def reset(self, num_points: int) -> None:
        self.__init__(num_points)


@dataclass
class DensifyResult:
    cloud: GaussianCloud
    keep: np.ndarray          # indices of surviving original rows, in output order
    num_new: int              # rows appended after the survivors
    cloned: int
    split: int
    pruned: int

    @property
    def changed(self) -> bool:
        return bool(self.cloned or self.split or self.pruned)


def densify_and_prune(
        cloud: GaussianCloud,
        mean_grad: np.ndarray,
        config: DensifyConfig,
        scene_extent: float,
        max_points: int,
        seed: int = 0,
) -> DensifyResult:
    """
    One densify / prune event.

    Points whose mean 2D gradient exceeds ``grad_threshold`` are cloned when
    their largest scale is at most ``percent_dense * scene_extent`` and
    split in two otherwise (children scales divided by ``split_scale_divisor``,
    parent removed). Points with opacity below ``prune_opacity`` are removed.
    New points copy every other attribute of their parent. When the result
    would exceed ``max_points``, the lowest-gradient candidates are skipped.

    The output is the survivors in their original order, then clones, then
    split children.
    """
    n = cloud.num_points
    act = activate(cloud)
    prune = act.opacity[:, 0] < config.prune_opacity
    candidates = np.flatnonzero((mean_grad > config.grad_threshold) & ~prune)

    budget = max(0, max_points - (n - int(prune.sum())))
    if candidates.size > budget:
        # highest gradient first, ties by index
        order = np.lexsort((candidates, -mean_grad[candidates]))
        candidates = np.sort(candidates[order[:budget]])

    max_scale = act.scale[candidates].max(axis=1) if candidates.size else np.zeros(0)
    small = max_scale <= config.percent_dense * scene_extent
    clone_idx = candidates[small]
    split_idx = candidates[~small]

    removed = prune.copy()
    removed[split_idx] = True
    keep = np.flatnonzero(~removed)

    clones = cloud.select(clone_idx)
    children = _split(cloud, split_idx, config.split_scale_divisor, seed)
    result = GaussianCloud.concat([cloud.select(keep), clones, children])
    num_new = clones.num_points + children.num_points

    logger.debug(
        "densify: %d cloned, %d split, %d pruned, %d -> %d points",
        clone_idx.size, split_idx.size, int(prune.sum()), n, result.num_points,
    )
    return DensifyResult(result, keep, num_new, int(clone_idx.size), int(split_idx.size), int(prune.sum()))


def _split(cloud: GaussianCloud, index: np.ndarray, divisor: float, seed: int) -> GaussianCloud:
    parents = cloud.select(np.repeat(index, SPLIT_CHILDREN))
    if parents.num_points == 0:
        return parents
    rng = np.random.default_rng(seed)
    scales = np.exp(clamp_log_scales(parents.log_scales.astype(np.float64)))
    z = rng.standard_normal(size=(parents.num_points, 3))
    norm = np.linalg.norm(z, axis=1, keepdims=True)
    z = np.where(norm > SPLIT_SAMPLE_RADIUS, z * (SPLIT_SAMPLE_RADIUS / norm), z)
    q, _ = normalize_quaternions(parents.rotations.astype(np.float64))
    R = quaternion_to_rotation(q)
    offsets = np.einsum("nij,nj->ni", R, z * scales)

    dtype = cloud.dtype
    parents.positions = (parents.positions + offsets).astype(dtype)
    parents.log_scales = (parents.log_scales - np.log(divisor)).astype(dtype)
    return parents
