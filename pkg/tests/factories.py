"""Builders for small float64 scenes used across the numeric tests."""
import numpy as np

from semsplat.camera.types import Camera, Intrinsics, Pose, SparsePoint
from semsplat.cloud.gaussians import GaussianCloud
from semsplat.cloud.sh import num_coeffs, rgb_to_sh
from semsplat.rasterizer import ALPHA_MAX, project
from semsplat.trainer.scene import Scene, View


def make_camera(width: int = 8, height: int = 8, focal: float = 20.0, pose: Pose = None, name: str = "view_000.png"):
    intrinsics = Intrinsics(
        fx=focal, fy=focal, u0=(width - 1) / 2.0, v0=(height - 1) / 2.0, width=width, height=height,
    )
    return Camera(intrinsics, pose if pose is not None else Pose.identity(), name=name)


def make_cloud(
        rng: np.random.Generator,
        n: int = 5,
        feature_dim: int = 4,
        sh_degree: int = 1,
        spread: float = 0.4,
        log_scale_range=(np.log(1.2), np.log(1.6)),
        opacity_range=(-2.0, 1.0),
        dtype=np.float64,
) -> GaussianCloud:
    """
    Gaussians in front of an identity-pose camera at depth 4..6.

    With the default 8 x 8 / focal 20 camera every splat has a 2D sigma of
    at least 4 px, so every pixel lies inside every footprint, and the
    opacity range keeps alpha below the 0.99 clamp. Gradients are smooth.
    """
    positions = np.column_stack([
        rng.uniform(-spread, spread, n),
        rng.uniform(-spread, spread, n),
        rng.uniform(4.0, 6.0, n),
    ])
    rotations = rng.normal(size=(n, 4))
    rotations /= np.linalg.norm(rotations, axis=1, keepdims=True)
    sh = np.zeros((n, num_coeffs(sh_degree), 3))
    sh[:, 0, :] = rgb_to_sh(rng.uniform(0.3, 0.7, size=(n, 3)))
    sh[:, 1:, :] = rng.uniform(-0.05, 0.05, size=(n, num_coeffs(sh_degree) - 1, 3))
    return GaussianCloud(
        positions=positions,
        rotations=rotations,
        log_scales=rng.uniform(*log_scale_range, size=(n, 3)),
        opacity_logits=rng.uniform(*opacity_range, size=(n, 1)),
        sh_coeffs=sh,
        features=rng.normal(size=(n, feature_dim)),
        sh_degree=sh_degree,
    ).astype(dtype)


def scattered_cloud(rng: np.random.Generator, n: int, width: int, height: int, focal: float,
                    feature_dim: int = 4, dtype=np.float64) -> GaussianCloud:
    """Small, strongly opaque splats spread over the image: exercises clamping, culling and early stop"""
    depth = rng.uniform(3.0, 8.0, n)
    u = rng.uniform(-0.2 * width, 1.2 * width, n)
    v = rng.uniform(-0.2 * height, 1.2 * height, n)
    positions = np.column_stack([(u - (width - 1) / 2) * depth / focal, (v - (height - 1) / 2) * depth / focal, depth])
    rotations = rng.normal(size=(n, 4))
    sh = np.zeros((n, num_coeffs(1), 3))
    sh[:, 0, :] = rgb_to_sh(rng.uniform(0.0, 1.0, size=(n, 3)))
    return GaussianCloud(
        positions=positions,
        rotations=rotations / np.linalg.norm(rotations, axis=1, keepdims=True),
        log_scales=np.log(rng.uniform(0.5, 4.0, size=(n, 3)) * depth[:, None] / focal),
        opacity_logits=rng.uniform(-3.0, 6.0, size=(n, 1)),
        sh_coeffs=sh,
        features=rng.normal(size=(n, feature_dim)),
        sh_degree=1,
    ).astype(dtype)


def make_scene(
        rng: np.random.Generator,
        num_views: int = 4,
        gt_views: int = 2,
        pseudo: bool = True,
        size: int = 12,
        num_points: int = 30,
        num_classes: int = 3,
):
    """
    In-memory scene: cameras on a circle looking at a small point ball,
    random images, random labels on the first ``gt_views`` views and random
    pseudo labels with a half-set boundary mask on the others.
    """

    views = []
    for i in range(num_views):
        angle = 2.0 * np.pi * i / num_views
        pose = Pose.look_at([5.0 * np.cos(angle), 5.0 * np.sin(angle), 1.0], [0.0, 0.0, 0.0])
        camera = make_camera(width=size, height=size, focal=1.5 * size, pose=pose, name=f"view_{i:03d}.png")
        image = rng.uniform(size=(size, size, 3)).astype(np.float32)
        view = View(f"view_{i:03d}", camera, image)
        if i < gt_views:
            view.labels = rng.integers(0, num_classes, size=(size, size)).astype(np.uint8)
        elif pseudo:
            view.pseudo_labels = rng.integers(0, num_classes, size=(size, size)).astype(np.uint8)
            view.boundary = np.zeros((size, size), dtype=np.uint8)
            view.boundary[:, : size // 2] = 1
        views.append(view)

    positions = rng.normal(scale=0.3, size=(num_points, 3))
    points = [SparsePoint(p, rng.uniform(size=3)) for p in positions]
    return Scene(views=views, points=points, num_classes=num_classes)


def _clear_of_kinks(cloud: GaussianCloud, camera: Camera, maha_margin: float, alpha_margin: float) -> bool:
    """No pixel centre sits on a footprint edge or on the opacity clamp of any splat"""
    splats = project(cloud, camera)
    rows, cols = np.mgrid[0:camera.height, 0:camera.width]
    pixels = np.stack([cols.ravel(), rows.ravel()], axis=-1).astype(np.float64)
    d = pixels[:, None, :] - splats.means2d[None, :, :]
    maha = np.einsum("pni,nij,pnj->pn", d, splats.conics, d)
    raw_alpha = splats.opacities[None, :] * np.exp(-0.5 * maha)
    on_edge = np.abs(maha - 9.0) < maha_margin
    on_clamp = (maha <= 9.0) & (np.abs(raw_alpha - ALPHA_MAX) < alpha_margin)
    return not (on_edge.any() or on_clamp.any())


def gradcheck_scenes(seed: int, count: int = 20, max_points: int = 20, max_size: int = 8,
                     maha_margin: float = 2e-3, alpha_margin: float = 5e-3):
    """
    Randomized (cloud, camera, tile_size) triples for finite-difference checks.

    Sizes vary from 4 x 4 up to ``max_size`` and point counts from 2 up to
    ``max_points``. Splat 0 sits on a pixel centre with alpha clamped at
    0.99 and splat 1 straddles the left image border, so footprint edges
    and the clamp are inside every image. Draws that put a pixel centre
    within the margins of either kink are rejected, since a central
    difference across a kink is meaningless.
    """
    rng = np.random.default_rng(seed)
    scenes = []
    while len(scenes) < count:
        width, height = (int(s) for s in rng.integers(4, max_size + 1, size=2))
        n = int(rng.integers(2, max_points + 1))
        focal = 10.0
        camera = make_camera(width=width, height=height, focal=focal)

        depth = rng.uniform(3.0, 6.0, n)
        u = rng.uniform(-0.1 * width, 1.1 * width, n)
        v = rng.uniform(-0.1 * height, 1.1 * height, n)
        u[0] = rng.integers(0, width) + rng.uniform(-0.05, 0.05)
        v[0] = rng.integers(0, height) + rng.uniform(-0.05, 0.05)
        u[1] = rng.uniform(-0.1 * width, 0.0)
        positions = np.column_stack([
            (u - (width - 1) / 2) * depth / focal, (v - (height - 1) / 2) * depth / focal, depth,
        ])
        rotations = rng.normal(size=(n, 4))
        sh = np.zeros((n, num_coeffs(1), 3))
        sh[:, 0, :] = rgb_to_sh(rng.uniform(0.0, 1.0, size=(n, 3)))
        sh[:, 1:, :] = rng.uniform(-0.1, 0.1, size=(n, num_coeffs(1) - 1, 3))
        logits = rng.uniform(-2.0, 4.0, size=(n, 1))
        logits[0] = 8.0
        cloud = GaussianCloud(
            positions=positions,
            rotations=rotations / np.linalg.norm(rotations, axis=1, keepdims=True),
            log_scales=np.log(rng.uniform(1.0, 2.5, size=(n, 3)) * depth[:, None] / focal),
            opacity_logits=logits,
            sh_coeffs=sh,
            features=rng.normal(size=(n, 4)),
            sh_degree=1,
        )
        tile_size = int(rng.choice([3, 4, 8]))
        if _clear_of_kinks(cloud, camera, maha_margin, alpha_margin):
            scenes.append((cloud, camera, tile_size))
    return scenes
