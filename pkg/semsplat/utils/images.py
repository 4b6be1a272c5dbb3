"""
PNG helpers: RGB images as float arrays in [0, 1], label-like maps as
single-channel indexed PNGs.
"""
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from semsplat.exceptions import MissingFile, ShapeMismatch

PathLike = Union[str, Path]

# background, then distinct class colours
_BASE_PALETTE = np.array([
    [0, 0, 0], [230, 25, 75], [60, 180, 75], [255, 225, 25], [0, 130, 200],
    [245, 130, 48], [145, 30, 180], [70, 240, 240], [240, 50, 230], [210, 245, 60],
    [250, 190, 212], [0, 128, 128], [220, 190, 255], [170, 110, 40], [255, 250, 200],
    [128, 0, 0], [170, 255, 195], [128, 128, 0], [255, 215, 180], [0, 0, 128],
], dtype=np.uint8)


def default_palette(num_colors: int = 256) -> np.ndarray:
    """num_colors x 3 uint8; index 255 is white so ignored pixels stand out"""
    rng = np.random.default_rng(0)
    palette = rng.integers(0, 256, size=(256, 3), dtype=np.uint8)
    palette[:len(_BASE_PALETTE)] = _BASE_PALETTE
    palette[255] = 255
    return palette[:num_colors]


def _open(path: PathLike) -> Image.Image:
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    return Image.open(path)


def read_rgb(path: PathLike, dtype=np.float32) -> np.ndarray:
    with _open(path) as img:
        return (np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0).astype(dtype)


def write_rgb(path: PathLike, image: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(path)


def read_index_map(path: PathLike) -> np.ndarray:
    """
    Pixel indices of a single-channel PNG ("P" or "L" mode) as uint8.

    Raises:
        ShapeMismatch: the file has colour channels
    """
    with _open(path) as img:
        if img.mode not in ("P", "L"):
            raise ShapeMismatch(
                f"{path} must be a single-channel indexed PNG, got mode {img.mode}", path=str(path)
            )
        return np.asarray(img, dtype=np.uint8).copy()


def write_index_map(path: PathLike, indices: np.ndarray, palette: Optional[np.ndarray] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    indices = np.ascontiguousarray(indices, dtype=np.uint8)
    img = Image.frombytes("P", (indices.shape[1], indices.shape[0]), indices.tobytes())
    img.putpalette((default_palette() if palette is None else palette).astype(np.uint8).ravel().tolist())
    img.save(path)
