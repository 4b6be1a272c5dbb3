"""
Analytic backward pass of ``render``.

Each tile reuses the blending state kept by ``render`` (or replays it
from the stored contributor lists) and returns per-splat partial
gradients; partials are summed in tile order.
For a pixel with contributors i = 0..n front to back, adjoint q_i =
c_i . dL/dC + s_i . dL/dS and suffix sum S_i = sum_{k>i} q_k w_k:

    dL/dalpha_i = T_i q_i - S_i / (1 - alpha_i)
"""
from typing import Optional, Tuple

import numpy as np

from semsplat.camera.types import Camera
from semsplat.cloud.gaussians import GaussianCloud
from semsplat.exceptions import ShapeMismatch
from semsplat.rasterizer.blending import ALPHA_MAX, blend_tile
from semsplat.rasterizer.projection import project_backward
from semsplat.rasterizer.types import BlendState, GradientBundle, RenderOutput, TileRecord
from semsplat.utils.parallel import parallel_map


def _check_adjoint(name: str, adjoint: np.ndarray, expected: tuple) -> None:
    if adjoint.shape != expected:
        raise ShapeMismatch(
            f"{name} adjoint has shape {adjoint.shape}, expected {expected}",
            expected=expected, actual=adjoint.shape,
        )


def render_backward(
        cloud: GaussianCloud,
        camera: Camera,
        output: RenderOutput,
        dL_dcolor: np.ndarray,
        dL_dfeature: np.ndarray,
        threads: int = 1,
) -> GradientBundle:
    """
    Gradients of a scalar loss with respect to every cloud attribute, given
    its adjoints on the rendered colour and feature maps.

    Points that did not contribute receive zero gradient.

    Raises:
        ShapeMismatch: adjoint shapes differ from the rendered maps
    """
    _check_adjoint("colour", dL_dcolor, output.color_image.shape)
    _check_adjoint("feature", dL_dfeature, output.feature_map.shape)
    if output.num_points != cloud.num_points:
        raise ShapeMismatch(
            "render output was produced for a different cloud",
            expected=output.num_points, actual=cloud.num_points,
        )

    splats = output.splats
    dtype = cloud.dtype
    P = len(splats)
    d_means2d = np.zeros((P, 2), dtype=dtype)
    d_conics = np.zeros((P, 2, 2), dtype=dtype)
    d_opacities = np.zeros(P, dtype=dtype)
    d_colors = np.zeros((P, 3), dtype=dtype)
    d_features = np.zeros((P, cloud.feature_dim), dtype=dtype)
    states = output.states or [None] * len(output.tiles)

    def tile_grads(item: Tuple[TileRecord, Optional[BlendState]]):
        tile, state = item
        ids = tile.splat_ids
        if ids.size == 0:
            return None
        if state is None:
            state = blend_tile(splats, tile, output.min_transmittance)
        gC = dL_dcolor[tile.y0:tile.y1, tile.x0:tile.x1].reshape(-1, 3)
        gF = dL_dfeature[tile.y0:tile.y1, tile.x0:tile.x1].reshape(-1, cloud.feature_dim)

        weights = state.weight_matrix()
        d_col = weights.T @ gC
        d_feat = weights.T @ gF

        pix, spl = state.pixel, state.splat
        q = (
            np.einsum("kc,kc->k", gC[pix], splats.colors[ids][spl])
            + np.einsum("kf,kf->k", gF[pix], splats.features[ids][spl])
        ).astype(np.float64)
        suffix = state.exclusive_suffix(q * state.weights)
        d_alpha = state.transmittance * q - suffix / (1.0 - state.alpha)
        # clamped alphas are constant in the parameters
        d_alpha = np.where(state.raw_alpha < ALPHA_MAX, d_alpha, 0.0)

        d_op = state.splat_sum(d_alpha * state.gauss)

        # alpha = sigma exp(-0.5 d^T Q d), d = pixel - mean
        conics = splats.conics[ids][spl]
        dx, dy = state.d[:, 0], state.d[:, 1]
        g = d_alpha * state.raw_alpha
        qd_x = conics[:, 0, 0] * dx + conics[:, 0, 1] * dy
        qd_y = conics[:, 1, 0] * dx + conics[:, 1, 1] * dy
        d_mean = np.stack([state.splat_sum(g * qd_x), state.splat_sum(g * qd_y)], axis=-1)

        d_con = np.empty((ids.size, 2, 2), dtype=np.float64)
        d_con[:, 0, 0] = -0.5 * state.splat_sum(g * dx * dx)
        d_con[:, 0, 1] = -0.5 * state.splat_sum(g * dx * dy)
        d_con[:, 1, 0] = d_con[:, 0, 1]
        d_con[:, 1, 1] = -0.5 * state.splat_sum(g * dy * dy)
        return ids, d_mean, d_con, d_op, d_col, d_feat

    # splat ids are unique within a tile; tiles are reduced in order whatever the worker count
    for result in parallel_map(tile_grads, list(zip(output.tiles, states)), threads):
        if result is None:
            continue
        ids, d_mean, d_con, d_op, d_col, d_feat = result
        d_means2d[ids] += d_mean
        d_conics[ids] += d_con
        d_opacities[ids] += d_op
        d_colors[ids] += d_col
        d_features[ids] += d_feat

    return project_backward(cloud, camera, splats, d_means2d, d_conics, d_opacities, d_colors, d_features)
