"""
Real spherical harmonics up to degree 3 for view-dependent colour.

colour = clip(sum_k Y_k(dir) * sh_k + 0.5, 0, 1); the backward pass returns
gradients for the coefficients and for the (unnormalized) view direction.
"""
from typing import Tuple

import numpy as np

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
)
SH_C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
)
MAX_DEGREE = 3


def num_coeffs(degree: int) -> int:
    return (degree + 1) ** 2


def rgb_to_sh(rgb: np.ndarray) -> np.ndarray:
    """DC coefficient reproducing ``rgb`` at every view direction"""
    return (rgb - 0.5) / SH_C0


def sh_to_rgb(dc: np.ndarray) -> np.ndarray:
    return dc * SH_C0 + 0.5


def sh_basis(degree: int, dirs: np.ndarray, with_grad: bool = False):
    """
    Basis values Y (N x K) at unit directions, and optionally dY/ddir (N x K x 3).
    """
    n = dirs.shape[0]
    K = num_coeffs(degree)
    Y = np.zeros((n, K), dtype=dirs.dtype)
    dY = np.zeros((n, K, 3), dtype=dirs.dtype) if with_grad else None
    Y[:, 0] = SH_C0
    if degree < 1:
        return (Y, dY) if with_grad else Y

    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    Y[:, 1] = -SH_C1 * y
    Y[:, 2] = SH_C1 * z
    Y[:, 3] = -SH_C1 * x
    if with_grad:
        dY[:, 1, 1] = -SH_C1
        dY[:, 2, 2] = SH_C1
        dY[:, 3, 0] = -SH_C1
    if degree < 2:
        return (Y, dY) if with_grad else Y

    xx, yy, zz = x * x, y * y, z * z
    xy, yz, xz = x * y, y * z, x * z
    Y[:, 4] = SH_C2[0] * xy
    Y[:, 5] = SH_C2[1] * yz
    Y[:, 6] = SH_C2[2] * (2.0 * zz - xx - yy)
    Y[:, 7] = SH_C2[3] * xz
    Y[:, 8] = SH_C2[4] * (xx - yy)
    if with_grad:
        dY[:, 4] = SH_C2[0] * np.stack([y, x, np.zeros_like(x)], axis=-1)
        dY[:, 5] = SH_C2[1] * np.stack([np.zeros_like(x), z, y], axis=-1)
        dY[:, 6] = SH_C2[2] * np.stack([-2.0 * x, -2.0 * y, 4.0 * z], axis=-1)
        dY[:, 7] = SH_C2[3] * np.stack([z, np.zeros_like(x), x], axis=-1)
        dY[:, 8] = SH_C2[4] * np.stack([2.0 * x, -2.0 * y, np.zeros_like(x)], axis=-1)
    if degree < 3:
        return (Y, dY) if with_grad else Y

    Y[:, 9] = SH_C3[0] * y * (3.0 * xx - yy)
    Y[:, 10] = SH_C3[1] * xy * z
    Y[:, 11] = SH_C3[2] * y * (4.0 * zz - xx - yy)
    Y[:, 12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy)
    Y[:, 13] = SH_C3[4] * x * (4.0 * zz - xx - yy)
    Y[:, 14] = SH_C3[5] * z * (xx - yy)
    Y[:, 15] = SH_C3[6] * x * (xx - 3.0 * yy)
    if with_grad:
        zero = np.zeros_like(x)
        dY[:, 9] = SH_C3[0] * np.stack([6.0 * xy, 3.0 * xx - 3.0 * yy, zero], axis=-1)
        dY[:, 10] = SH_C3[1] * np.stack([yz, xz, xy], axis=-1)
        dY[:, 11] = SH_C3[2] * np.stack([-2.0 * xy, 4.0 * zz - xx - 3.0 * yy, 8.0 * yz], axis=-1)
        dY[:, 12] = SH_C3[3] * np.stack([-6.0 * xz, -6.0 * yz, 6.0 * zz - 3.0 * xx - 3.0 * yy], axis=-1)
        dY[:, 13] = SH_C3[4] * np.stack([4.0 * zz - 3.0 * xx - yy, -2.0 * xy, 8.0 * xz], axis=-1)
        dY[:, 14] = SH_C3[5] * np.stack([2.0 * xz, -2.0 * yz, xx - yy], axis=-1)
        dY[:, 15] = SH_C3[6] * np.stack([3.0 * xx - 3.0 * yy, -6.0 * xy, zero], axis=-1)
    return (Y, dY) if with_grad else Y


def view_directions(positions: np.ndarray, camera_center: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit directions from the camera centre to each point, and the raw offsets"""
    offset = positions - camera_center.astype(positions.dtype, copy=False)
    norm = np.linalg.norm(offset, axis=-1, keepdims=True)
    return offset / np.maximum(norm, 1e-12), offset


def eval_sh(degree: int, sh: np.ndarray, dirs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Colour per point.

    Args:
        degree: active SH degree (<= the degree sh was allocated for)
        sh: N x K x 3 coefficients
        dirs: N x 3 unit view directions

    Returns:
        (colour N x 3 in [0, 1], clip mask N x 3 with True where clipping was active)
    """
    K = num_coeffs(degree)
    Y = sh_basis(degree, dirs)
    raw = np.einsum("nk,nkc->nc", Y, sh[:, :K, :]) + 0.5
    clipped = (raw < 0.0) | (raw > 1.0)
    return np.clip(raw, 0.0, 1.0), clipped


def eval_sh_backward(
        degree: int,
        sh: np.ndarray,
        dirs: np.ndarray,
        offsets: np.ndarray,
        clipped: np.ndarray,
        dL_dcolor: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradients of the colour evaluation.

    Returns:
        (dL/dsh N x K_alloc x 3, dL/dposition N x 3 through the view direction)
    """
    K = num_coeffs(degree)
    g = np.where(clipped, 0.0, dL_dcolor).astype(dL_dcolor.dtype, copy=False)
    Y, dY = sh_basis(degree, dirs, with_grad=True)
    d_sh = np.zeros_like(sh)
    d_sh[:, :K, :] = Y[:, :, None] * g[:, None, :]

    # dcolor/ddir summed against the adjoint, then through dir = offset / |offset|
    d_dir = np.einsum("nkd,nkc,nc->nd", dY, sh[:, :K, :], g)
    norm = np.maximum(np.linalg.norm(offsets, axis=-1, keepdims=True), 1e-12)
    d_offset = (d_dir - dirs * np.sum(d_dir * dirs, axis=-1, keepdims=True)) / norm
    return d_sh, d_offset
