"""
Tutorial 02: Render a cloud built from sparse points and backpropagate an
image-space loss into the Gaussian attributes.

Prerequisites:
  python tutorials/01_synthetic_scene.py

Run:
  python tutorials/02_render_and_gradients.py
"""

import numpy as np

from semsplat.cloud import init_from_points
from semsplat.losses import l1_loss
from semsplat.rasterizer import render, render_backward
from semsplat.trainer import load_scene


def main() -> None:
    scene = load_scene("runs/tutorial_scene", dtype=np.float64)
    cloud = init_from_points(scene.points, feature_dim=8, sh_degree=1, dtype=np.float64)
    view = scene.views[0]

    output = render(cloud, view.camera, threads=2)
    print(f"rendered {view.view_id}: {output.visible.sum()} of {cloud.num_points} Gaussians visible")

    loss, d_color = l1_loss(output.color_image, view.image)
    grads = render_backward(cloud, view.camera, output, d_color, np.zeros_like(output.feature_map))
    print(f"L1 {loss:.4f}")
    for name, grad in grads.arrays():
        print(f"  d{name}: max |g| = {np.abs(grad).max():.3e}")


if __name__ == "__main__":
    main()
