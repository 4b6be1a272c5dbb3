"""
semsplat Rasterizer - differentiable splatting of colour and semantic features

Quick Start:
    ```python
    from semsplat.rasterizer import render, render_backward

    out = render(cloud, camera, tile_size=32, threads=4)
    out.color_image      # H x W x 3
    out.feature_map      # H x W x 16
    out.alpha_map        # H x W

    grads = render_backward(cloud, camera, out, dL_dcolor, dL_dfeature)
    grads.positions      # N x 3, same layout as cloud.positions
    ```
"""
from semsplat.rasterizer.types import (
    BlendState,
    GradientBundle,
    Projected2DGaussian,
    ProjectedSplats,
    RenderOutput,
    TileRecord,
)
from semsplat.rasterizer.projection import CULL_EXTENT, LOWPASS, project, project_backward
from semsplat.rasterizer.blending import (
    ALPHA_MAX,
    DEFAULT_TILE_SIZE,
    MIN_TRANSMITTANCE,
    alpha_at,
    blend_tile,
    depth_sort,
    render,
    render_reference,
)
from semsplat.rasterizer.backward import render_backward

__all__ = [
    "BlendState",
    "GradientBundle",
    "Projected2DGaussian",
    "ProjectedSplats",
    "RenderOutput",
    "TileRecord",
    "CULL_EXTENT",
    "LOWPASS",
    "project",
    "project_backward",
    "ALPHA_MAX",
    "DEFAULT_TILE_SIZE",
    "MIN_TRANSMITTANCE",
    "alpha_at",
    "blend_tile",
    "depth_sort",
    "render",
    "render_reference",
    "render_backward",
]
