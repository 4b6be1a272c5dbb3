"""
semsplat Camera - pixel / camera / world frames and COLMAP ingestion

Quick Start:
    ```python
    from semsplat.camera import parse_colmap, world_to_camera, camera_to_pixel

    views, points = parse_colmap("scene/colmap")
    cam = views[0]
    uv, depth = camera_to_pixel(world_to_camera(points[0].position, cam.pose), cam.intrinsics)
    ```
"""
from semsplat.camera.types import DEFAULT_NEAR, Camera, Intrinsics, Pose, SparsePoint
from semsplat.camera.geometry import (
    camera_to_pixel,
    pixel_to_camera_ray,
    project_batch,
    projection_jacobian,
    projection_jacobian_batch,
    quaternion_to_rotation,
    rotation_to_quaternion,
    world_to_camera,
    world_to_camera_batch,
)
from semsplat.camera.colmap import parse_colmap, write_colmap

__all__ = [
    "DEFAULT_NEAR",
    "Camera",
    "Intrinsics",
    "Pose",
    "SparsePoint",
    "camera_to_pixel",
    "pixel_to_camera_ray",
    "project_batch",
    "projection_jacobian",
    "projection_jacobian_batch",
    "quaternion_to_rotation",
    "rotation_to_quaternion",
    "world_to_camera",
    "world_to_camera_batch",
    "parse_colmap",
    "write_colmap",
]
