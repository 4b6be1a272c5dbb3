"""
Front-to-back alpha blending of depth-sorted splats.

A splat covers a pixel when the pixel lies inside its 3-sigma ellipse.
Its opacity there is alpha = min(0.99, sigma * exp(-0.5 d^T Q d)) and its
blending weight is alpha times the transmittance left by the splats in
front of it. Blending stops once transmittance drops below
``min_transmittance`` (0 disables the cut).
"""
import logging
from typing import List, Sequence, Union

import numpy as np

from semsplat.camera.types import Camera
from semsplat.cloud.gaussians import GaussianCloud
from semsplat.exceptions import DegenerateCovariance
from semsplat.rasterizer.projection import project
from semsplat.rasterizer.types import (
    BlendState,
    Projected2DGaussian,
    ProjectedSplats,
    RenderOutput,
    TileRecord,
)
from semsplat.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

ALPHA_MAX = 0.99
FOOTPRINT_SIGMA = 3.0
MIN_TRANSMITTANCE = 1e-4
DEFAULT_TILE_SIZE = 32
MIN_DETERMINANT = 1e-12
# bounding boxes are widened by this many pixels; the exact footprint test decides
BBOX_PAD = 1e-3


def depth_sort(
        splats: Union[ProjectedSplats, Sequence[Projected2DGaussian]],
) -> Union[ProjectedSplats, List[Projected2DGaussian]]:
    """Ascending depth, ties by ascending source index"""
    if isinstance(splats, ProjectedSplats):
        return splats.take(np.lexsort((splats.source_index, splats.depths)))
    return sorted(splats, key=lambda s: (s.depth, s.source_index))


def alpha_at(splat: Projected2DGaussian, pixel: np.ndarray) -> float:
    """
    Opacity of one splat at a pixel position (no footprint cut).

    Raises:
        DegenerateCovariance: det(cov2d) < 1e-12
    """
    cov = np.asarray(splat.cov2d, dtype=np.float64)
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    if det < MIN_DETERMINANT:
        raise DegenerateCovariance(float(det))
    d = np.asarray(pixel, dtype=np.float64) - np.asarray(splat.mean2d, dtype=np.float64)
    maha = d @ np.linalg.solve(cov, d)
    return float(min(ALPHA_MAX, splat.opacity * np.exp(-0.5 * maha)))


def footprint_boxes(splats: ProjectedSplats, splat_ids: np.ndarray) -> tuple:
    """Padded pixel-space bounding boxes (lo, hi), each len(splat_ids) x 2, of the 3-sigma ellipses"""
    cov = splats.cov2d[splat_ids].astype(np.float64)
    half = FOOTPRINT_SIGMA * np.sqrt(np.stack([cov[:, 0, 0], cov[:, 1, 1]], axis=-1)) + BBOX_PAD
    centre = splats.means2d[splat_ids].astype(np.float64)
    return centre - half, centre + half


def _segments(pixel: np.ndarray) -> tuple:
    """First pair of every pixel run in a pixel-sorted pair list, and each pair's run index"""
    first = np.ones(pixel.size, dtype=bool)
    first[1:] = pixel[1:] != pixel[:-1]
    return np.flatnonzero(first), np.cumsum(first) - 1


def blend_tile(
        splats: ProjectedSplats,
        tile: TileRecord,
        min_transmittance: float = MIN_TRANSMITTANCE,
) -> BlendState:
    """
    Blending state of one tile against its depth-sorted splats.

    Each splat only visits the pixels of its bounding box that fall inside
    the tile, so the work follows the covered area instead of tile pixels
    times splats.
    """
    dtype = splats.means2d.dtype
    ids = tile.splat_ids
    height, width = tile.shape

    lo, hi = footprint_boxes(splats, ids)
    x_lo = np.clip(np.ceil(lo[:, 0]), tile.x0, tile.x1).astype(np.int64)
    x_hi = np.clip(np.floor(hi[:, 0]), tile.x0 - 1, tile.x1 - 1).astype(np.int64)
    y_lo = np.clip(np.ceil(lo[:, 1]), tile.y0, tile.y1).astype(np.int64)
    y_hi = np.clip(np.floor(hi[:, 1]), tile.y0 - 1, tile.y1 - 1).astype(np.int64)
    span_x = np.maximum(x_hi - x_lo + 1, 0)
    counts = span_x * np.maximum(y_hi - y_lo + 1, 0)

    # splat-major enumeration of every box pixel
    splat = np.repeat(np.arange(ids.size), counts)
    offset = np.arange(splat.size) - np.repeat(np.cumsum(counts) - counts, counts)
    x = x_lo[splat] + offset % np.maximum(span_x[splat], 1)
    y = y_lo[splat] + offset // np.maximum(span_x[splat], 1)

    d = np.stack([x, y], axis=-1).astype(dtype) - splats.means2d[ids][splat]
    conics = splats.conics[ids][splat]
    dx, dy = d[:, 0], d[:, 1]
    maha = conics[:, 0, 0] * dx * dx + 2.0 * conics[:, 0, 1] * dx * dy + conics[:, 1, 1] * dy * dy
    covered = np.flatnonzero(maha <= FOOTPRINT_SIGMA ** 2)

    pixel = (y - tile.y0) * width + (x - tile.x0)
    # stable: splats stay front to back within a pixel
    order = covered[np.argsort(pixel[covered], kind="stable")]
    pixel, splat, d, maha = pixel[order], splat[order], d[order], maha[order]

    gauss = np.exp(-0.5 * maha)
    raw_alpha = splats.opacities[ids][splat] * gauss
    alpha = np.minimum(raw_alpha, ALPHA_MAX).astype(dtype, copy=False)

    starts, segment = _segments(pixel)
    log_survive = np.log1p(-alpha.astype(np.float64))
    before = np.cumsum(log_survive) - log_survive
    transmittance = np.exp(before - before[starts][segment])

    # early stop: a pixel drops every splat after its transmittance ran out
    blended = transmittance >= min_transmittance
    if not blended.all():
        pixel, splat, d, gauss, raw_alpha, alpha, transmittance = (
            a[blended] for a in (pixel, splat, d, gauss, raw_alpha, alpha, transmittance)
        )
        starts, segment = _segments(pixel)
    weights = (alpha * transmittance).astype(dtype)
    return BlendState(
        pixel=pixel,
        splat=splat,
        d=d,
        gauss=gauss,
        raw_alpha=raw_alpha,
        alpha=alpha,
        transmittance=transmittance,
        weights=weights,
        starts=starts,
        segment=segment,
        num_pixels=height * width,
        num_splats=ids.size,
    )


def tile_grid(height: int, width: int, tile_size: int) -> List[tuple]:
    return [
        (y0, min(y0 + tile_size, height), x0, min(x0 + tile_size, width))
        for y0 in range(0, height, tile_size)
        for x0 in range(0, width, tile_size)
    ]


def bin_splats(splats: ProjectedSplats, height: int, width: int, tile_size: int) -> List[TileRecord]:
    """Assign each depth-sorted splat to the tiles its 3-sigma bounding box touches"""
    lo, hi = footprint_boxes(splats, np.arange(len(splats)))
    tiles = []
    for y0, y1, x0, x1 in tile_grid(height, width, tile_size):
        hit = (lo[:, 0] <= x1 - 1) & (hi[:, 0] >= x0) & (lo[:, 1] <= y1 - 1) & (hi[:, 1] >= y0)
        tiles.append(TileRecord(y0, y1, x0, x1, np.flatnonzero(hit)))
    return tiles


def render(
        cloud: GaussianCloud,
        camera: Camera,
        tile_size: int = DEFAULT_TILE_SIZE,
        threads: int = 1,
        min_transmittance: float = MIN_TRANSMITTANCE,
) -> RenderOutput:
    """
    Render colour, semantic features and alpha for one view.

    Tiles are blended independently (optionally on ``threads`` workers)
    and each writes only its own pixel block, so the result does not
    depend on the worker count. The per-tile blending states are kept on
    the output for ``render_backward``.
    """
    dtype = cloud.dtype
    H, W = camera.height, camera.width
    splats = depth_sort(project(cloud, camera))
    tiles = bin_splats(splats, H, W, tile_size)

    color = np.zeros((H, W, 3), dtype=dtype)
    features = np.zeros((H, W, cloud.feature_dim), dtype=dtype)
    alpha_map = np.zeros((H, W), dtype=dtype)

    def blend(tile: TileRecord):
        if tile.splat_ids.size == 0:
            return None
        state = blend_tile(splats, tile, min_transmittance)
        weights = state.weight_matrix()
        return (
            state,
            weights @ splats.colors[tile.splat_ids],
            weights @ splats.features[tile.splat_ids],
            state.pixel_sum(state.weights),
        )

    states = []
    for tile, result in zip(tiles, parallel_map(blend, tiles, threads)):
        if result is None:
            states.append(None)
            continue
        state, c, f, a = result
        states.append(state)
        h, w = tile.shape
        color[tile.y0:tile.y1, tile.x0:tile.x1] = c.reshape(h, w, 3)
        features[tile.y0:tile.y1, tile.x0:tile.x1] = f.reshape(h, w, -1)
        alpha_map[tile.y0:tile.y1, tile.x0:tile.x1] = a.reshape(h, w)

    visible = np.zeros(cloud.num_points, dtype=bool)
    visible[splats.source_index] = True
    return RenderOutput(
        color_image=color,
        feature_map=features,
        alpha_map=alpha_map,
        splats=splats,
        tiles=tiles,
        visible=visible,
        camera=camera,
        min_transmittance=min_transmittance,
        num_points=cloud.num_points,
        states=states,
    )


def render_reference(
        cloud: GaussianCloud,
        camera: Camera,
        min_transmittance: float = MIN_TRANSMITTANCE,
) -> RenderOutput:
    """
    Naive renderer: every pixel walks the full sorted splat list one splat
    at a time. Slow; used to check ``render``.
    """
    dtype = cloud.dtype
    H, W = camera.height, camera.width
    splats = depth_sort(project(cloud, camera))

    color = np.zeros((H, W, 3), dtype=dtype)
    features = np.zeros((H, W, cloud.feature_dim), dtype=dtype)
    alpha_map = np.zeros((H, W), dtype=dtype)
    for row in range(H):
        for col in range(W):
            T = 1.0
            for i in range(len(splats)):
                dx = col - splats.means2d[i, 0]
                dy = row - splats.means2d[i, 1]
                Q = splats.conics[i]
                maha = Q[0, 0] * dx * dx + 2.0 * Q[0, 1] * dx * dy + Q[1, 1] * dy * dy
                if maha > FOOTPRINT_SIGMA ** 2:
                    continue
                if T < min_transmittance:
                    break
                alpha = min(ALPHA_MAX, splats.opacities[i] * np.exp(-0.5 * maha))
                weight = alpha * T
                color[row, col] += weight * splats.colors[i]
                features[row, col] += weight * splats.features[i]
                alpha_map[row, col] += weight
                T *= 1.0 - alpha

    visible = np.zeros(cloud.num_points, dtype=bool)
    visible[splats.source_index] = True
    whole = TileRecord(0, H, 0, W, np.arange(len(splats)))
    return RenderOutput(
        color_image=color,
        feature_map=features,
        alpha_map=alpha_map,
        splats=splats,
        tiles=[whole],
        visible=visible,
        camera=camera,
        min_transmittance=min_transmittance,
        num_points=cloud.num_points,
    )
