"""
semsplat Cloud - the Gaussian point set

Quick Start:
    ```python
    from semsplat.camera import parse_colmap
    from semsplat.cloud import init_from_points, save_checkpoint, load_checkpoint

    cameras, points = parse_colmap("scene/colmap")
    cloud = init_from_points(points, feature_dim=16, seed=0)

    save_checkpoint("out/checkpoint.sspl", cloud)
    restored = load_checkpoint("out/checkpoint.sspl").cloud
    ```
"""
from semsplat.cloud.gaussians import (
    ATTRIBUTES,
    DEFAULT_FEATURE_DIM,
    DEFAULT_SH_DEGREE,
    LOG_SCALE_MAX,
    LOG_SCALE_MIN,
    MAX_POINTS,
    Activated,
    GaussianCloud,
    activate,
    covariance_3d,
    covariance_3d_backward,
    covariance_3d_batch,
    init_from_points,
    sigmoid,
)
from semsplat.cloud.sh import eval_sh, eval_sh_backward, num_coeffs, rgb_to_sh, sh_basis, sh_to_rgb, view_directions
from semsplat.cloud.checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "ATTRIBUTES",
    "DEFAULT_FEATURE_DIM",
    "DEFAULT_SH_DEGREE",
    "LOG_SCALE_MAX",
    "LOG_SCALE_MIN",
    "MAX_POINTS",
    "Activated",
    "GaussianCloud",
    "activate",
    "covariance_3d",
    "covariance_3d_backward",
    "covariance_3d_batch",
    "init_from_points",
    "sigmoid",
    "eval_sh",
    "eval_sh_backward",
    "num_coeffs",
    "rgb_to_sh",
    "sh_basis",
    "sh_to_rgb",
    "view_directions",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
]
