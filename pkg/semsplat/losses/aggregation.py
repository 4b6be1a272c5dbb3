"""
KL aggregation regularizers pulling neighbouring semantic features toward
the same channel distribution.

Features become distributions through a channel softmax; each sampled
anchor contributes KL(p_anchor || p_neighbour) for each of its k
neighbours, and the loss is the mean over all m * k pairs. Neighbours are
grid pixels for the 2D form and nearest cloud points for the 3D form.
"""
import logging
from typing import Tuple

import numpy as np

from semsplat.exceptions import InvalidSampleCount, ShapeMismatch, TooFewPoints
from semsplat.losses.base import LossResult
from semsplat.losses.semantic import log_softmax
from semsplat.spatial_index.index import SpatialIndex, knn_batch

logger = logging.getLogger(__name__)


def kl_pairs(anchors: np.ndarray, neighbours: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Mean KL divergence between softmax(anchors) (m x C) and each of their
    softmax(neighbours) (m x k x C).

    Returns:
        (value, d/danchors, d/dneighbours)
    """
    m, k = neighbours.shape[:2]
    logp = log_softmax(anchors)
    logq = log_softmax(neighbours)
    p = np.exp(logp)
    q = np.exp(logq)
    ratio = logp[:, None, :] - logq
    kl = np.sum(p[:, None, :] * ratio, axis=-1)
    scale = 1.0 / (m * k)
    value = float(np.sum(kl)) * scale

    d_anchor = np.sum(p[:, None, :] * (ratio - kl[..., None]), axis=1) * scale
    d_neigh = (q - p[:, None, :]) * scale
    return value, d_anchor.astype(anchors.dtype, copy=False), d_neigh.astype(anchors.dtype, copy=False)


def sample_indices(n: int, m: int, seed: int) -> np.ndarray:
    """m distinct indices in [0, n), reproducible from ``seed``"""
    return np.random.default_rng(seed).choice(n, size=m, replace=False)


def grid_offsets(radius: int) -> np.ndarray:
    """Offsets (dy, dx) within ``radius``, excluding (0, 0), ordered by distance then row-major"""
    r = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(r, r, indexing="ij")
    dy, dx = dy.ravel(), dx.ravel()
    d2 = dy * dy + dx * dx
    keep = (d2 > 0) & (d2 <= radius * radius)
    dy, dx, d2 = dy[keep], dx[keep], d2[keep]
    order = np.lexsort((dx, dy, d2))
    return np.stack([dy[order], dx[order]], axis=-1)


def pixel_neighbors(height: int, width: int, anchors: np.ndarray, k: int) -> np.ndarray:
    """
    The k nearest in-image pixels (flat row-major indices) of each anchor,
    nearest first, ties by row-major index.
    """
    rows, cols = np.divmod(anchors, width)
    radius = int(np.ceil(np.sqrt(k))) + 1
    while True:
        offsets = grid_offsets(radius)
        rr = rows[:, None] + offsets[None, :, 0]
        cc = cols[:, None] + offsets[None, :, 1]
        inside = (rr >= 0) & (rr < height) & (cc >= 0) & (cc < width)
        if np.all(np.count_nonzero(inside, axis=1) >= k) or radius > height + width:
            break
        radius *= 2
    take = inside & (np.cumsum(inside, axis=1) <= k)
    return (rr[take] * width + cc[take]).reshape(anchors.shape[0], k)


def agg2d_loss(feature_map: np.ndarray, m: int, k: int, seed: int) -> LossResult:
    """
    2D aggregation loss on an H x W x F rendered feature map.

    Raises:
        InvalidSampleCount: m < 1, k < 1 or m * (k + 1) > H * W
    """
    H, W, F = feature_map.shape
    if m < 1 or k < 1 or m * (k + 1) > H * W:
        raise InvalidSampleCount(
            f"cannot sample m={m} anchors with k={k} neighbours from a {H}x{W} map",
            details={"m": m, "k": k, "pixels": H * W},
        )
    flat = feature_map.reshape(H * W, F)
    anchors = sample_indices(H * W, m, seed)
    neighbours = pixel_neighbors(H, W, anchors, k)

    value, d_anchor, d_neigh = kl_pairs(flat[anchors], flat[neighbours])
    grad = np.zeros_like(flat)
    np.add.at(grad, anchors, d_anchor)
    np.add.at(grad, neighbours.ravel(), d_neigh.reshape(-1, F))
    return LossResult(value, grad.reshape(H, W, F))


def agg3d_loss(features: np.ndarray, index: SpatialIndex, m: int, k: int, seed: int) -> LossResult:
    """
    3D aggregation loss over point features (N x F), neighbours from the
    positions ``index`` was built on. Only features receive gradient.

    Raises:
        TooFewPoints: N <= k
        ShapeMismatch: the index covers a different number of points
    """
    n = features.shape[0]
    if n <= k:
        raise TooFewPoints(n, k)
    if index.num_points != n:
        raise ShapeMismatch(
            f"spatial index covers {index.num_points} points, features have {n}",
            expected=n, actual=index.num_points,
        )
    if m < 1 or k < 1:
        raise InvalidSampleCount(f"m={m} and k={k} must be positive", details={"m": m, "k": k})

    anchors = sample_indices(n, min(m, n), seed)
    neighbours = knn_batch(index, index.positions[anchors], k, exclude=anchors)

    value, d_anchor, d_neigh = kl_pairs(features[anchors], features[neighbours])
    grad = np.zeros_like(features)
    np.add.at(grad, anchors, d_anchor)
    np.add.at(grad, neighbours.ravel(), d_neigh.reshape(-1, features.shape[1]))
    return LossResult(value, grad)
