"""
semsplat Camera - Type Definitions

Pinhole intrinsics, world-to-camera poses and sparse structure-from-motion
points. All records are frozen after construction.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DEFAULT_NEAR = 0.01


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels; fx = f/dx, fy = f/dy"""
    fx: float
    fy: float
    u0: float
    v0: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.u0 < self.width and 0 <= self.v0 < self.height):
            raise ValueError(
                f"principal point ({self.u0}, {self.v0}) outside image {self.width}x{self.height}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, 0.0, self.u0],
            [0.0, self.fy, self.v0],
            [0.0, 0.0, 1.0],
        ])

    def scaled(self, factor: float) -> "Intrinsics":
        """Intrinsics for an image resized by ``factor``"""
        width = max(1, int(round(self.width * factor)))
        height = max(1, int(round(self.height * factor)))
        return Intrinsics(
            fx=self.fx * factor, fy=self.fy * factor,
            u0=min(self.u0 * factor, width - 1), v0=min(self.v0 * factor, height - 1),
            width=width, height=height,
        )


@dataclass(frozen=True, eq=False)
class Pose:
    """World-to-camera rigid transform: p_cam = R p_world + t"""
    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-6:
            raise ValueError("rotation is not orthonormal within 1e-6")
        if abs(np.linalg.det(R) - 1.0) > 1e-6:
            raise ValueError("rotation determinant is not +1 within 1e-6")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @property
    def center(self) -> np.ndarray:
        """Camera centre in world coordinates (-R^T t)"""
        return -self.R.T @ self.t

    @classmethod
    def identity(cls) -> "Pose":
        return cls(R=np.eye(3), t=np.zeros(3))

    @classmethod
    def look_at(cls, eye: np.ndarray, target: np.ndarray, up: np.ndarray = (0.0, 0.0, 1.0)) -> "Pose":
        """
        Pose of a camera at ``eye`` looking at ``target``.

        Camera axes follow the COLMAP convention: +z forward, +x right, +y down.
        """
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=np.float64))
        norm = np.linalg.norm(right)
        if norm < 1e-9:
            raise ValueError("up vector is parallel to the viewing direction")
        right /= norm
        down = np.cross(forward, right)
        R = np.stack([right, down, forward])
        return cls(R=R, t=-R @ eye)


@dataclass(frozen=True, eq=False)
class Camera:
    """One registered view: intrinsics + pose + name"""
    intrinsics: Intrinsics
    pose: Pose
    name: str = ""
    image_id: Optional[int] = None

    @property
    def width(self) -> int:
        return self.intrinsics.width

    @property
    def height(self) -> int:
        return self.intrinsics.height

    @property
    def center(self) -> np.ndarray:
        return self.pose.center


@dataclass(frozen=True, eq=False)
class SparsePoint:
    """Structure-from-motion point: world position and colour in [0, 1]"""
    position: np.ndarray
    color: np.ndarray
    track_length: int = field(default=2, compare=False)

    def __post_init__(self):
        position = np.asarray(self.position, dtype=np.float64).reshape(3)
        color = np.asarray(self.color, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(position)):
            raise ValueError("point position must be finite")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "color", color)
