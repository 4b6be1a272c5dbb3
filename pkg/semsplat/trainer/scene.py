"""
Scene bundle loading.

Layout of a scene directory:
    colmap/     cameras.txt, images.txt, points3D.txt
    images/     <view>.png
    labels/     <view>.png      (ground truth, sparse)
    pseudo/     <view>_label.png, <view>_boundary.png
    scene.yaml  class names, palette, labeled views
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

from semsplat.camera.colmap import parse_colmap
from semsplat.camera.types import Camera, SparsePoint
from semsplat.exceptions import ConfigError, ShapeMismatch
from semsplat.losses.semantic import IGNORE_INDEX
from semsplat.pseudolabel.io import BOUNDARY_SUFFIX, LABEL_SUFFIX
from semsplat.utils.images import read_index_map, read_rgb

logger = logging.getLogger(__name__)

SCENE_FILE = "scene.yaml"


@dataclass(eq=False)
class View:
    """One training view: camera, RGB image and whatever labels it has"""
    view_id: str
    camera: Camera
    image: np.ndarray
    labels: Optional[np.ndarray] = None
    pseudo_labels: Optional[np.ndarray] = None
    boundary: Optional[np.ndarray] = None

    @property
    def has_gt(self) -> bool:
        return self.labels is not None

    @property
    def has_pseudo(self) -> bool:
        return self.pseudo_labels is not None and self.boundary is not None


@dataclass(eq=False)
class Scene:
    views: List[View]
    points: List[SparsePoint]
    num_classes: int
    class_names: List[str] = field(default_factory=list)
    directory: Optional[Path] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def gt_views(self) -> List[View]:
        return [v for v in self.views if v.has_gt]

    @property
    def pseudo_views(self) -> List[View]:
        """Views supervised only by pseudo labels"""
        return [v for v in self.views if v.has_pseudo and not v.has_gt]

    def view(self, view_id: str) -> View:
        for v in self.views:
            if v.view_id == view_id:
                return v
        raise KeyError(view_id)

    @property
    def extent(self) -> float:
        """1.1 x the largest camera-centre distance from their mean"""
        centers = np.stack([v.camera.center for v in self.views])
        radius = float(np.max(np.linalg.norm(centers - centers.mean(axis=0), axis=1)))
        return 1.1 * radius if radius > 0 else 1.0


def view_id_of(camera: Camera) -> str:
    return Path(camera.name).stem


def read_scene_meta(directory: Path) -> Dict[str, Any]:
    path = directory / SCENE_FILE
    if not path.exists():
        return {}
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Failed to parse {path}: {e}", cause=e)
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be a mapping")
    return data


def _check_size(path: Path, array: np.ndarray, camera: Camera) -> None:
    expected = (camera.height, camera.width)
    if array.shape[:2] != expected:
        raise ShapeMismatch(
            f"{path} is {array.shape[1]}x{array.shape[0]}, camera expects {camera.width}x{camera.height}",
            expected=expected, actual=array.shape[:2], path=str(path),
        )


def load_scene(directory: Union[str, Path], use_pseudo_labels: bool = True, dtype=np.float32) -> Scene:
    """
    Load cameras, sparse points, images and labels of a scene bundle.

    Raises:
        MissingFile: COLMAP files or a listed image are absent
        ShapeMismatch: an image or label map disagrees with its camera, naming the file
    """
    directory = Path(directory)
    cameras, points = parse_colmap(directory / "colmap")
    meta = read_scene_meta(directory)

    views = []
    max_label = -1
    for camera in cameras:
        view_id = view_id_of(camera)
        image_path = directory / "images" / camera.name
        image = read_rgb(image_path, dtype=dtype)
        _check_size(image_path, image, camera)

        labels = None
        label_path = directory / "labels" / f"{view_id}.png"
        if label_path.exists():
            labels = read_index_map(label_path)
            _check_size(label_path, labels, camera)
            scored = labels[labels != IGNORE_INDEX]
            if scored.size:
                max_label = max(max_label, int(scored.max()))

        pseudo = boundary = None
        pseudo_path = directory / "pseudo" / f"{view_id}{LABEL_SUFFIX}"
        if use_pseudo_labels and pseudo_path.exists():
            pseudo = read_index_map(pseudo_path)
            boundary_path = directory / "pseudo" / f"{view_id}{BOUNDARY_SUFFIX}"
            boundary = read_index_map(boundary_path)
            _check_size(pseudo_path, pseudo, camera)
            _check_size(boundary_path, boundary, camera)

        views.append(View(view_id, camera, image, labels, pseudo, boundary))

    num_classes = int(meta.get("num_classes", max_label + 1))
    if num_classes <= max_label:
        raise ConfigError(
            f"{SCENE_FILE} declares {num_classes} classes but labels reach class {max_label}",
            field="num_classes",
        )
    scene = Scene(
        views=views,
        points=points,
        num_classes=num_classes,
        class_names=list(meta.get("class_names", [])),
        directory=directory,
        meta=meta,
    )
    logger.info(
        "loaded scene %s: %d views (%d labeled, %d pseudo), %d points, %d classes",
        directory, len(views), len(scene.gt_views), len(scene.pseudo_views), len(points), num_classes,
    )
    return scene
