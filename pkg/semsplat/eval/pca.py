"""
Three-channel visualisation of rendered feature maps by principal
component analysis.

Features of rank below three are handled in one of two modes. The default
(``strict=False``, used by the ``render --pca`` and ``visualize`` commands)
logs a warning and fills the missing channels with zeros. ``strict=True``
raises ``DegenerateFeatures`` instead.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from semsplat.exceptions import DegenerateFeatures, ShapeMismatch

logger = logging.getLogger(__name__)

NUM_COMPONENTS = 3


@dataclass(frozen=True, eq=False)
class PcaBasis:
    """
    mean (F,), components (F x 3, unit columns, zero columns past the
    rank) and the per-channel range of the fitted projections.
    """
    mean: np.ndarray
    components: np.ndarray
    low: np.ndarray
    high: np.ndarray
    rank: int

    def project(self, pixels: np.ndarray) -> np.ndarray:
        return (pixels - self.mean) @ self.components

    def reconstruct(self, projections: np.ndarray) -> np.ndarray:
        return projections @ self.components.T + self.mean

    def normalize(self, projections: np.ndarray) -> np.ndarray:
        span = self.high - self.low
        out = np.zeros_like(projections)
        live = span > 0
        out[:, live] = (projections[:, live] - self.low[live]) / span[live]
        return np.clip(out, 0.0, 1.0)


def _pixels(feature_map: np.ndarray) -> np.ndarray:
    if feature_map.ndim != 3:
        raise ShapeMismatch(f"expected an H x W x F feature map, got shape {feature_map.shape}")
    pixels = feature_map.reshape(-1, feature_map.shape[-1]).astype(np.float64)
    if pixels.shape[0] < NUM_COMPONENTS:
        raise ShapeMismatch(
            f"PCA needs at least {NUM_COMPONENTS} pixels, got {pixels.shape[0]}",
            expected=NUM_COMPONENTS, actual=pixels.shape[0],
        )
    return pixels


def _fit(pixels: np.ndarray, strict: bool) -> PcaBasis:
    mean = pixels.mean(axis=0)
    centered = pixels - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = (s.max() if s.size else 0.0) * max(centered.shape) * np.finfo(np.float64).eps
    rank = int(np.count_nonzero(s > tol))
    if rank < NUM_COMPONENTS:
        if strict:
            raise DegenerateFeatures(rank)
        logger.warning("feature covariance has rank %d; padding %d channels with zeros",
                       rank, NUM_COMPONENTS - rank)

    components = np.zeros((pixels.shape[1], NUM_COMPONENTS))
    used = min(rank, NUM_COMPONENTS)
    components[:, :used] = vt[:used].T
    # largest-magnitude loading of each component is positive
    for c in range(used):
        pivot = np.argmax(np.abs(components[:, c]))
        if components[pivot, c] < 0:
            components[:, c] = -components[:, c]

    projections = centered @ components
    return PcaBasis(mean, components, projections.min(axis=0), projections.max(axis=0), rank)


def fit_pca_basis(feature_maps: Sequence[np.ndarray], strict: bool = False) -> PcaBasis:
    """One basis over the pixels of several maps, for comparing views side by side"""
    if len(feature_maps) == 0:
        raise ShapeMismatch("no feature maps to fit")
    return _fit(np.concatenate([_pixels(m) for m in feature_maps]), strict)


def pca_visualize(
        feature_map: np.ndarray,
        basis: Optional[PcaBasis] = None,
        strict: bool = False,
) -> np.ndarray:
    """
    H x W x F features to an H x W x 3 image in [0, 1].

    Without ``basis`` the PCA is fitted on this map alone and each channel
    is min-max normalised over it. With a shared basis the fitted ranges
    are reused (values outside them are clipped).

    Raises:
        DegenerateFeatures: rank below 3 and ``strict`` set
        ShapeMismatch: not a 3D array, fewer than 3 pixels, or a basis of another width
    """
    pixels = _pixels(feature_map)
    if basis is None:
        basis = _fit(pixels, strict)
    elif basis.mean.shape[0] != pixels.shape[1]:
        raise ShapeMismatch(
            f"basis fitted on {basis.mean.shape[0]} features, map has {pixels.shape[1]}",
            expected=basis.mean.shape[0], actual=pixels.shape[1],
        )
    image = basis.normalize(basis.project(pixels))
    return image.reshape(feature_map.shape[0], feature_map.shape[1], NUM_COMPONENTS)
