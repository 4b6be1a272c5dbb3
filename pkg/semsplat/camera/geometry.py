"""
Frame conversions: world -> camera -> pixel, and the projection Jacobian.

Scalar entry points take a single 3-vector; the ``*_batch`` variants work on
N x 3 arrays and are what the rasterizer uses.
"""
from typing import Tuple

import numpy as np

from semsplat.camera.types import DEFAULT_NEAR, Intrinsics, Pose
from semsplat.exceptions import BehindCamera


def world_to_camera(p: np.ndarray, pose: Pose) -> np.ndarray:
    """R p + t"""
    p = np.asarray(p)
    return pose.R.astype(p.dtype, copy=False) @ p + pose.t.astype(p.dtype, copy=False)


def world_to_camera_batch(points: np.ndarray, pose: Pose) -> np.ndarray:
    dtype = points.dtype
    return points @ pose.R.T.astype(dtype, copy=False) + pose.t.astype(dtype, copy=False)


def _check_depth(z: float, near: float) -> None:
    if not z > near:
        raise BehindCamera(float(z), near)


def camera_to_pixel(pc: np.ndarray, K: Intrinsics, near: float = DEFAULT_NEAR) -> Tuple[np.ndarray, float]:
    """
    Perspective projection of a camera-frame point.

    Returns:
        ((u, v), depth)

    Raises:
        BehindCamera: pc.z <= near
    """
    x, y, z = (float(c) for c in pc)
    _check_depth(z, near)
    return np.array([K.fx * x / z + K.u0, K.fy * y / z + K.v0]), z


def pixel_to_camera_ray(u: float, v: float, K: Intrinsics) -> np.ndarray:
    """Camera-frame ray through pixel (u, v), scaled to z = 1"""
    return np.array([(u - K.u0) / K.fx, (v - K.v0) / K.fy, 1.0])


def projection_jacobian(pc: np.ndarray, K: Intrinsics, near: float = DEFAULT_NEAR) -> np.ndarray:
    """d(u, v) / d(x, y, z) at a camera-frame point, 2 x 3"""
    x, y, z = (float(c) for c in pc)
    _check_depth(z, near)
    return np.array([
        [K.fx / z, 0.0, -K.fx * x / (z * z)],
        [0.0, K.fy / z, -K.fy * y / (z * z)],
    ])


def project_batch(pc: np.ndarray, K: Intrinsics) -> np.ndarray:
    """Pixel coordinates of N camera-frame points (no depth check)"""
    z = pc[:, 2]
    return np.stack([K.fx * pc[:, 0] / z + K.u0, K.fy * pc[:, 1] / z + K.v0], axis=-1)


def projection_jacobian_batch(pc: np.ndarray, K: Intrinsics) -> np.ndarray:
    """N x 2 x 3 Jacobians (no depth check)"""
    x, y, z = pc[:, 0], pc[:, 1], pc[:, 2]
    inv_z = 1.0 / z
    inv_z2 = inv_z * inv_z
    J = np.zeros((pc.shape[0], 2, 3), dtype=pc.dtype)
    J[:, 0, 0] = K.fx * inv_z
    J[:, 0, 2] = -K.fx * x * inv_z2
    J[:, 1, 1] = K.fy * inv_z
    J[:, 1, 2] = -K.fy * y * inv_z2
    return J


def quaternion_to_rotation(q: np.ndarray) -> np.ndarray:
    """
    Rotation matrices from (w, x, y, z) quaternions.

    Accepts a single 4-vector or an N x 4 array; inputs are assumed normalized.
    """
    q = np.asarray(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3), dtype=np.result_type(q.dtype, np.float32))
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - w * z)
    R[..., 0, 2] = 2 * (x * z + w * y)
    R[..., 1, 0] = 2 * (x * y + w * z)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - w * x)
    R[..., 2, 0] = 2 * (x * z - w * y)
    R[..., 2, 1] = 2 * (y * z + w * x)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def rotation_to_quaternion(R: np.ndarray) -> np.ndarray:
    """(w, x, y, z) with w >= 0 for a single rotation matrix"""
    Rxx, Ryx, Rzx, Rxy, Ryy, Rzy, Rxz, Ryz, Rzz = np.asarray(R, dtype=np.float64).flat
    K = np.array([
        [Rxx - Ryy - Rzz, 0, 0, 0],
        [Ryx + Rxy, Ryy - Rxx - Rzz, 0, 0],
        [Rzx + Rxz, Rzy + Ryz, Rzz - Rxx - Ryy, 0],
        [Ryz - Rzy, Rzx - Rxz, Rxy - Ryx, Rxx + Ryy + Rzz]]) / 3.0
    eigvals, eigvecs = np.linalg.eigh(K)
    q = eigvecs[[3, 0, 1, 2], np.argmax(eigvals)]
    if q[0] < 0:
        q *= -1
    return q
