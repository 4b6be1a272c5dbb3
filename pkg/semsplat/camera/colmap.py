"""
COLMAP text model reader / writer.

Reads ``cameras.txt``, ``images.txt`` and ``points3D.txt`` exactly as
COLMAP's text export writes them. Only undistorted pinhole models are
accepted because the splatting equations assume one.

Poses stay in COLMAP's native world-to-camera convention.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np

from semsplat.camera.geometry import quaternion_to_rotation, rotation_to_quaternion
from semsplat.camera.types import Camera, Intrinsics, Pose, SparsePoint
from semsplat.exceptions import MissingFile, ParseError, UnsupportedCameraModel

logger = logging.getLogger(__name__)

SUPPORTED_MODELS = {"SIMPLE_PINHOLE": 3, "PINHOLE": 4}
MIN_TRACK_LENGTH = 2


@dataclass(frozen=True)
class _CameraRow:
    camera_id: int
    intrinsics: Intrinsics


def _data_lines(path: Path) -> Iterator[Tuple[int, str]]:
    """(line number, stripped text) for every non-comment line, blank lines kept"""
    with open(path, "r", encoding="utf-8") as fid:
        for lineno, raw in enumerate(fid, start=1):
            line = raw.strip()
            if line.startswith("#"):
                continue
            yield lineno, line


def _floats(path: Path, lineno: int, elems: Sequence[str], what: str) -> List[float]:
    try:
        return [float(e) for e in elems]
    except ValueError:
        raise ParseError(str(path), lineno, f"non-numeric {what}: {' '.join(elems)}")


def _int(path: Path, lineno: int, text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(str(path), lineno, f"invalid {what} '{text}'")


def read_cameras_text(path: Path) -> Dict[int, _CameraRow]:
    cameras: Dict[int, _CameraRow] = {}
    for lineno, line in _data_lines(path):
        if not line:
            continue
        elems = line.split()
        if len(elems) < 4:
            raise ParseError(str(path), lineno, "expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]")
        camera_id = _int(path, lineno, elems[0], "camera id")
        model = elems[1]
        if model not in SUPPORTED_MODELS:
            raise UnsupportedCameraModel(model, str(path), lineno)
        width = _int(path, lineno, elems[2], "width")
        height = _int(path, lineno, elems[3], "height")
        params = _floats(path, lineno, elems[4:], "camera parameters")
        if len(params) != SUPPORTED_MODELS[model]:
            raise ParseError(
                str(path), lineno,
                f"{model} expects {SUPPORTED_MODELS[model]} parameters, got {len(params)}",
            )
        if model == "SIMPLE_PINHOLE":
            f, cx, cy = params
            fx, fy = f, f
        else:
            fx, fy, cx, cy = params
        try:
            intrinsics = Intrinsics(fx=fx, fy=fy, u0=cx, v0=cy, width=width, height=height)
        except ValueError as e:
            raise ParseError(str(path), lineno, str(e))
        cameras[camera_id] = _CameraRow(camera_id, intrinsics)
    return cameras


def read_images_text(path: Path, cameras: Dict[int, _CameraRow]) -> List[Camera]:
    """
    Images come in pairs of lines: the pose header, then the 2D observations
    (which may be blank). Only the header is used.
    """
    views: List[Camera] = []
    expect_header = True
    for lineno, line in _data_lines(path):
        if not expect_header:
            expect_header = True
            continue
        if not line:
            continue
        elems = line.split()
        if len(elems) < 10:
            raise ParseError(
                str(path), lineno,
                "expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME, got truncated row",
            )
        image_id = _int(path, lineno, elems[0], "image id")
        qvec = np.array(_floats(path, lineno, elems[1:5], "quaternion"))
        tvec = np.array(_floats(path, lineno, elems[5:8], "translation"))
        camera_id = _int(path, lineno, elems[8], "camera id")
        name = " ".join(elems[9:])
        if camera_id not in cameras:
            raise ParseError(str(path), lineno, f"unknown camera id {camera_id}")
        norm = np.linalg.norm(qvec)
        if not norm > 0:
            raise ParseError(str(path), lineno, "zero quaternion")
        try:
            pose = Pose(R=quaternion_to_rotation(qvec / norm), t=tvec)
        except ValueError as e:
            raise ParseError(str(path), lineno, str(e))
        views.append(Camera(cameras[camera_id].intrinsics, pose, name=name, image_id=image_id))
        expect_header = False
    return views


def read_points3d_text(path: Path, min_track_length: int = MIN_TRACK_LENGTH) -> List[SparsePoint]:
    points: List[SparsePoint] = []
    dropped = 0
    for lineno, line in _data_lines(path):
        if not line:
            continue
        elems = line.split()
        if len(elems) < 8:
            raise ParseError(str(path), lineno, "expected POINT3D_ID X Y Z R G B ERROR TRACK[]")
        xyz = _floats(path, lineno, elems[1:4], "position")
        rgb = _floats(path, lineno, elems[4:7], "colour")
        track = elems[8:]
        if len(track) % 2:
            raise ParseError(str(path), lineno, "track must hold (IMAGE_ID, POINT2D_IDX) pairs")
        track_length = len(track) // 2
        if track_length < min_track_length:
            dropped += 1
            continue
        if not np.all(np.isfinite(xyz)):
            raise ParseError(str(path), lineno, "non-finite position")
        points.append(SparsePoint(np.array(xyz), np.array(rgb) / 255.0, track_length=track_length))
    if dropped:
        logger.debug("dropped %d points with track length < %d", dropped, min_track_length)
    return points


def parse_colmap(directory: Union[str, Path]) -> Tuple[List[Camera], List[SparsePoint]]:
    """
    Parse a COLMAP text model.

    Returns:
        (one Camera per registered image in file order, retained sparse points)

    Raises:
        MissingFile: for each absent model file
        ParseError: malformed row, with file and line number
        UnsupportedCameraModel: any model other than PINHOLE / SIMPLE_PINHOLE
    """
    directory = Path(directory)
    files = {name: directory / name for name in ("cameras.txt", "images.txt", "points3D.txt")}
    for path in files.values():
        if not path.is_file():
            raise MissingFile(str(path))

    cameras = read_cameras_text(files["cameras.txt"])
    views = read_images_text(files["images.txt"], cameras)
    points = read_points3d_text(files["points3D.txt"])
    logger.info("parsed COLMAP model %s: %d views, %d points", directory, len(views), len(points))
    return views, points


def write_colmap(
        directory: Union[str, Path],
        views: Sequence[Camera],
        points: Sequence[SparsePoint],
) -> None:
    """
    Write a COLMAP text model, one PINHOLE camera per view.

    Every point is given a track over the first two images so that it
    survives the track-length filter on reading.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    with open(directory / "cameras.txt", "w", encoding="utf-8") as fid:
        fid.write("# Camera list with one line of data per camera:\n")
        fid.write("#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n")
        for i, view in enumerate(views, start=1):
            K = view.intrinsics
            fid.write(f"{i} PINHOLE {K.width} {K.height} {K.fx!r} {K.fy!r} {K.u0!r} {K.v0!r}\n")

    with open(directory / "images.txt", "w", encoding="utf-8") as fid:
        fid.write("# Image list with two lines of data per image:\n")
        fid.write("#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n")
        fid.write("#   POINTS2D[] as (X, Y, POINT3D_ID)\n")
        for i, view in enumerate(views, start=1):
            q = rotation_to_quaternion(view.pose.R)
            t = view.pose.t
            values = " ".join(repr(float(v)) for v in (*q, *t))
            fid.write(f"{i} {values} {i} {view.name}\n\n")

    n_images = max(len(views), 1)
    with open(directory / "points3D.txt", "w", encoding="utf-8") as fid:
        fid.write("# 3D point list with one line of data per point:\n")
        fid.write("#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n")
        for i, point in enumerate(points, start=1):
            x, y, z = (repr(float(v)) for v in point.position)
            r, g, b = (int(round(float(np.clip(c, 0.0, 1.0)) * 255)) for c in point.color)
            fid.write(f"{i} {x} {y} {z} {r} {g} {b} 0.0 1 0 {min(2, n_images)} 0\n")
