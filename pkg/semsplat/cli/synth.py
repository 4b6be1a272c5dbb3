"""
Desk-scale synthetic scenes: coloured ellipsoidal blobs on a checkered
ground plane, seen by a ring of cameras.

Images, dense labels and instance maps come from an analytic ray-ellipsoid
renderer with flat shading. It shares nothing with the splatting
rasterizer, so scores measured against it are not self-referential.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import yaml

from semsplat.camera.colmap import write_colmap
from semsplat.camera.geometry import quaternion_to_rotation
from semsplat.camera.types import Camera, Intrinsics, Pose, SparsePoint
from semsplat.config import SynthConfig
from semsplat.pseudolabel.io import write_manifest
from semsplat.trainer.scene import SCENE_FILE
from semsplat.utils.images import default_palette, write_index_map, write_rgb

logger = logging.getLogger(__name__)

BACKGROUND_CLASS = 0
CHECKER_CELL = 0.25
CHECKER_SHADES = (0.35, 0.6)
SKY_COLOR = (0.0, 0.0, 0.0)
LOOK_AT_HEIGHT = 0.3
BLOB_POINT_SHARE = 0.6
BLOB_GAP = 0.1
MAX_PLACEMENT_ATTEMPTS = 2000


@dataclass(frozen=True, eq=False)
class Blob:
    center: np.ndarray      # (3,)
    axes: np.ndarray        # semi-axes (3,)
    rotation: np.ndarray    # 3 x 3, columns are the ellipsoid axes in world space
    color: np.ndarray       # (3,) in [0, 1]
    class_id: int


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    blobs: List[Blob]
    ground_radius: float

    @property
    def ground_instance(self) -> int:
        return len(self.blobs) + 1


@dataclass(frozen=True, eq=False)
class OracleFrame:
    """
    Analytic render of one camera: colour, class labels, instance ids
    (blob i is i + 1, the ground plane is the last id, sky is 0) and hit
    depth (inf for sky).
    """
    color: np.ndarray
    labels: np.ndarray
    instances: np.ndarray
    depth: np.ndarray


def view_name(index: int) -> str:
    return f"view_{index:03d}"


def class_colors(num_classes: int) -> np.ndarray:
    """Per blob class colour; index 0 is unused (background)"""
    palette = default_palette(num_classes + 1).astype(np.float64) / 255.0
    palette[BACKGROUND_CLASS] = SKY_COLOR
    return palette


def make_scene(config: SynthConfig) -> SyntheticScene:
    """Blobs rest on the ground inside the camera ring, centres kept apart"""
    rng = np.random.default_rng([config.seed, 0])
    colors = class_colors(config.num_classes)
    placement = 0.45 * config.ground_radius
    blobs: List[Blob] = []
    attempts = 0
    while len(blobs) < config.num_blobs:
        attempts += 1
        axes = rng.uniform(0.18, 0.4, size=3)
        xy = rng.uniform(-placement, placement, size=2)
        crowded = any(np.linalg.norm(xy - b.center[:2]) < axes[:2].max() + b.axes[:2].max() + BLOB_GAP for b in blobs)
        # crowded scenes (many blobs on a small patch) accept overlaps eventually
        if crowded and attempts < MAX_PLACEMENT_ATTEMPTS:
            continue
        yaw = rng.uniform(0.0, np.pi)
        half = 0.5 * yaw
        rotation = quaternion_to_rotation(np.array([np.cos(half), 0.0, 0.0, np.sin(half)]))
        class_id = 1 + len(blobs) % config.num_classes
        shade = rng.uniform(0.85, 1.0)
        blobs.append(Blob(
            center=np.array([xy[0], xy[1], axes[2]]),
            axes=axes,
            rotation=rotation,
            color=np.clip(colors[class_id] * shade, 0.0, 1.0),
            class_id=class_id,
        ))
    return SyntheticScene(blobs, config.ground_radius)


def orbit_cameras(config: SynthConfig) -> List[Camera]:
    size = config.image_size
    focal = config.focal_factor * size
    intrinsics = Intrinsics(fx=focal, fy=focal, u0=(size - 1) / 2.0, v0=(size - 1) / 2.0, width=size, height=size)
    target = np.array([0.0, 0.0, LOOK_AT_HEIGHT])
    cameras = []
    for i in range(config.num_views):
        angle = 2.0 * np.pi * i / config.num_views
        eye = np.array([config.orbit_radius * np.cos(angle), config.orbit_radius * np.sin(angle), config.orbit_height])
        cameras.append(Camera(intrinsics, Pose.look_at(eye, target), name=f"{view_name(i)}.png", image_id=i + 1))
    return cameras


def pixel_rays(camera: Camera) -> Tuple[np.ndarray, np.ndarray]:
    """World-space origin and unnormalised directions (H*W x 3) through (u, v) = (col, row)"""
    K = camera.intrinsics
    rows, cols = np.mgrid[0:K.height, 0:K.width].astype(np.float64)
    dirs_cam = np.stack([(cols - K.u0) / K.fx, (rows - K.v0) / K.fy, np.ones_like(cols)], axis=-1).reshape(-1, 3)
    return camera.center, dirs_cam @ camera.pose.R


def intersect_ellipsoid(origin: np.ndarray, dirs: np.ndarray, blob: Blob) -> np.ndarray:
    """Nearest positive ray parameter per ray, inf on a miss"""
    local_origin = (blob.rotation.T @ (origin - blob.center)) / blob.axes
    local_dirs = (dirs @ blob.rotation) / blob.axes
    a = np.einsum("ij,ij->i", local_dirs, local_dirs)
    b = 2.0 * local_dirs @ local_origin
    c = float(local_origin @ local_origin) - 1.0
    disc = b * b - 4.0 * a * c
    t = np.full(dirs.shape[0], np.inf)
    hit = disc >= 0.0
    root = np.sqrt(disc[hit])
    near = (-b[hit] - root) / (2.0 * a[hit])
    far = (-b[hit] + root) / (2.0 * a[hit])
    t_hit = np.where(near > 0.0, near, far)
    t[hit] = np.where(t_hit > 0.0, t_hit, np.inf)
    return t


def intersect_ground(origin: np.ndarray, dirs: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """Ray parameter on the square ground patch z = 0 (inf on a miss) and the hit points"""
    t = np.full(dirs.shape[0], np.inf)
    down = dirs[:, 2] < 0.0
    t[down] = -origin[2] / dirs[down, 2]
    points = origin + np.where(np.isfinite(t), t, 0.0)[:, None] * dirs
    inside = (np.abs(points[:, 0]) <= radius) & (np.abs(points[:, 1]) <= radius)
    t[~inside] = np.inf
    return t, points


def checker_color(points: np.ndarray) -> np.ndarray:
    cell = np.floor(points[:, 0] / CHECKER_CELL) + np.floor(points[:, 1] / CHECKER_CELL)
    shade = np.where(cell.astype(np.int64) % 2 == 0, CHECKER_SHADES[0], CHECKER_SHADES[1])
    return np.repeat(shade[:, None], 3, axis=1)


def render_oracle(scene: SyntheticScene, camera: Camera) -> OracleFrame:
    origin, dirs = pixel_rays(camera)
    n = dirs.shape[0]
    best_t = np.full(n, np.inf)
    color = np.tile(np.asarray(SKY_COLOR, dtype=np.float64), (n, 1))
    labels = np.full(n, BACKGROUND_CLASS, dtype=np.uint8)
    instances = np.zeros(n, dtype=np.uint8)

    ground_t, ground_points = intersect_ground(origin, dirs, scene.ground_radius)
    hit = ground_t < best_t
    best_t[hit] = ground_t[hit]
    color[hit] = checker_color(ground_points[hit])
    instances[hit] = scene.ground_instance

    for i, blob in enumerate(scene.blobs):
        t = intersect_ellipsoid(origin, dirs, blob)
        hit = t < best_t
        best_t[hit] = t[hit]
        color[hit] = blob.color
        labels[hit] = blob.class_id
        instances[hit] = i + 1

    H, W = camera.height, camera.width
    depth = best_t * np.linalg.norm(dirs, axis=1)
    return OracleFrame(
        color=color.reshape(H, W, 3),
        labels=labels.reshape(H, W),
        instances=instances.reshape(H, W),
        depth=depth.reshape(H, W),
    )


def compact_instance_ids(maps: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """Renumber ids present anywhere to 1..K in increasing order, keeping 0"""
    present = np.unique(np.concatenate([np.unique(m) for m in maps.values()]))
    present = present[present != 0]
    lookup = np.zeros(256, dtype=np.uint8)
    lookup[present] = np.arange(1, present.size + 1, dtype=np.uint8)
    return {view_id: lookup[m] for view_id, m in maps.items()}


def sample_surface_points(scene: SyntheticScene, count: int, seed: int) -> List[SparsePoint]:
    """Points on the blob surfaces and the ground patch, carrying their flat colours"""
    rng = np.random.default_rng([seed, 1])
    num_blob = int(round(count * BLOB_POINT_SHARE)) if scene.blobs else 0
    points: List[SparsePoint] = []

    which = rng.integers(len(scene.blobs), size=num_blob) if num_blob else np.zeros(0, dtype=np.int64)
    for i, blob in enumerate(scene.blobs):
        m = int(np.count_nonzero(which == i))
        if m == 0:
            continue
        unit = rng.normal(size=(m, 3))
        unit /= np.linalg.norm(unit, axis=1, keepdims=True)
        surface = (unit * blob.axes) @ blob.rotation.T + blob.center
        above = surface[:, 2] > 0.0
        for p in surface[above]:
            points.append(SparsePoint(position=p, color=blob.color.copy()))

    num_ground = count - num_blob
    xy = rng.uniform(-scene.ground_radius, scene.ground_radius, size=(num_ground, 2))
    ground = np.concatenate([xy, np.zeros((num_ground, 1))], axis=1)
    for p, c in zip(ground, checker_color(ground)):
        points.append(SparsePoint(position=p, color=c))
    return points


def labeled_view_indices(num_views: int, labeled: int) -> List[int]:
    """Evenly spaced around the ring"""
    return sorted({int(i * num_views // labeled) for i in range(labeled)})


def scene_meta(config: SynthConfig, labeled: List[str]) -> dict:
    palette = default_palette(config.num_classes + 1)
    return {
        "num_classes": config.num_classes + 1,
        "class_names": ["background"] + [f"class_{c}" for c in range(1, config.num_classes + 1)],
        "palette": palette.tolist(),
        "labeled_views": labeled,
        "image_size": config.image_size,
        "num_blobs": config.num_blobs,
        "seed": config.seed,
    }


def generate_scene(config: SynthConfig, out: Union[str, Path]) -> Path:
    """
    Write a complete scene bundle:

        images/     RGB for every view
        labels/     dense labels for the labeled views only
        oracle/     dense labels for every view (evaluation only)
        instances/  instance maps + manifest.csv
        colmap/     cameras, poses and sampled surface points
        scene.yaml  class names, palette, labeled views
    """
    out = Path(out)
    scene = make_scene(config)
    cameras = orbit_cameras(config)
    labeled_idx = set(labeled_view_indices(config.num_views, config.labeled_views))
    palette = default_palette()

    instance_maps: Dict[str, np.ndarray] = {}
    labeled: List[str] = []
    for i, camera in enumerate(cameras):
        view_id = view_name(i)
        frame = render_oracle(scene, camera)
        write_rgb(out / "images" / camera.name, frame.color)
        write_index_map(out / "oracle" / f"{view_id}.png", frame.labels, palette)
        if i in labeled_idx:
            write_index_map(out / "labels" / f"{view_id}.png", frame.labels, palette)
            labeled.append(view_id)
        instance_maps[view_id] = frame.instances

    entries = {}
    for view_id, instances in compact_instance_ids(instance_maps).items():
        write_index_map(out / "instances" / f"{view_id}.png", instances)
        entries[view_id] = f"{view_id}.png"
    write_manifest(out / "instances" / "manifest.csv", entries)

    write_colmap(out / "colmap", cameras, sample_surface_points(scene, config.sparse_points, config.seed))
    (out / SCENE_FILE).write_text(yaml.safe_dump(scene_meta(config, labeled), sort_keys=False), encoding="utf-8")
    logger.info(
        "synthesized scene %s: %d blobs, %d views (%d labeled), %dx%d",
        out, len(scene.blobs), len(cameras), len(labeled), config.image_size, config.image_size,
    )
    return out
