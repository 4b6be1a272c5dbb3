"""
3D Gaussians -> screen-space splats (EWA linearization) and the chain
rule back from splat gradients to cloud attributes.
"""
import numpy as np

from semsplat.camera.types import DEFAULT_NEAR, Camera
from semsplat.cloud.gaussians import GaussianCloud, covariance_3d_backward, covariance_3d_batch, sigmoid
from semsplat.cloud.sh import eval_sh, eval_sh_backward, view_directions
from semsplat.rasterizer.types import GradientBundle, ProjectedSplats

LOWPASS = 0.3
CULL_EXTENT = 1.3


def _rotate(points: np.ndarray, R: np.ndarray) -> np.ndarray:
    # elementwise so each row is computed identically wherever it sits in the batch
    return points[:, 0:1] * R[:, 0] + points[:, 1:2] * R[:, 1] + points[:, 2:3] * R[:, 2]


def _inverse_2x2(cov: np.ndarray) -> np.ndarray:
    a, b, c = cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 1]
    det = a * c - b * b
    inv = np.empty_like(cov)
    inv[:, 0, 0] = c / det
    inv[:, 0, 1] = -b / det
    inv[:, 1, 0] = -b / det
    inv[:, 1, 1] = a / det
    return inv


def project(
        cloud: GaussianCloud,
        camera: Camera,
        near: float = DEFAULT_NEAR,
        lowpass: float = LOWPASS,
) -> ProjectedSplats:
    """
    Project every point into ``camera``.

    Points with depth <= near, or whose mean lands more than 1.3x the half
    image extent away from the image centre, are culled. Returned splats
    keep cloud order; see ``depth_sort``.
    """
    dtype = cloud.dtype
    K = camera.intrinsics
    W = camera.pose.R.astype(dtype)
    t = camera.pose.t.astype(dtype)

    pc = _rotate(cloud.positions, W) + t
    z = pc[:, 2]
    keep = z > near
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(keep, K.fx * pc[:, 0] / z + K.u0, np.inf)
        v = np.where(keep, K.fy * pc[:, 1] / z + K.v0, np.inf)
    half_w, half_h = 0.5 * K.width, 0.5 * K.height
    keep &= (np.abs(u - half_w) <= CULL_EXTENT * half_w) & (np.abs(v - half_h) <= CULL_EXTENT * half_h)
    idx = np.flatnonzero(keep)

    pc = pc[idx]
    x, y, z = pc[:, 0], pc[:, 1], pc[:, 2]
    J = np.zeros((idx.size, 2, 3), dtype=dtype)
    J[:, 0, 0] = K.fx / z
    J[:, 0, 2] = -K.fx * x / (z * z)
    J[:, 1, 1] = K.fy / z
    J[:, 1, 2] = -K.fy * y / (z * z)
    T = J @ W

    cov3d = covariance_3d_batch(cloud.rotations[idx], cloud.log_scales[idx])
    cov2d = T @ cov3d["cov"] @ np.swapaxes(T, 1, 2)
    cov2d[:, 0, 0] += lowpass
    cov2d[:, 1, 1] += lowpass

    dirs, offsets = view_directions(cloud.positions[idx], camera.center)
    colors, clipped = eval_sh(cloud.sh_degree, cloud.sh_coeffs[idx], dirs)

    return ProjectedSplats(
        means2d=np.stack([u[idx], v[idx]], axis=-1).astype(dtype, copy=False),
        cov2d=cov2d,
        conics=_inverse_2x2(cov2d),
        depths=z.copy(),
        colors=colors.astype(dtype, copy=False),
        features=cloud.features[idx],
        opacities=sigmoid(cloud.opacity_logits[idx, 0]),
        source_index=idx.astype(np.int64),
        aux={
            "pc": pc, "J": J, "T": T,
            "cov3d": cov3d["cov"], "R": cov3d["R"], "M": cov3d["M"], "scales": cov3d["scales"],
            "q": cov3d["q"], "q_norm": cov3d["q_norm"],
            "dirs": dirs, "offsets": offsets, "clipped": clipped,
        },
    )


def project_backward(
        cloud: GaussianCloud,
        camera: Camera,
        splats: ProjectedSplats,
        d_means2d: np.ndarray,
        d_conics: np.ndarray,
        d_opacities: np.ndarray,
        d_colors: np.ndarray,
        d_features: np.ndarray,
) -> GradientBundle:
    """
    Chain per-splat gradients (in ``splats`` row order) to the cloud.

    The conic gradient is taken with respect to the full 2 x 2 matrix.
    """
    K = camera.intrinsics
    dtype = cloud.dtype
    W = camera.pose.R.astype(dtype)
    src = splats.source_index
    aux = splats.aux
    grads = GradientBundle.zeros_like(cloud)
    if src.size == 0:
        return grads

    grads.features[src] = d_features
    grads.means2d[src] = d_means2d

    # opacity = sigmoid(logit)
    sig = splats.opacities
    grads.opacity_logits[src, 0] = d_opacities * sig * (1.0 - sig)

    # colour = SH(dir(position))
    d_sh, d_offset = eval_sh_backward(
        cloud.sh_degree, cloud.sh_coeffs[src], aux["dirs"], aux["offsets"], aux["clipped"], d_colors
    )
    grads.sh_coeffs[src] = d_sh

    # conic = cov2d^-1
    Q = splats.conics
    d_cov2d = -Q @ d_conics @ Q

    # cov2d = T cov3d T^T + lowpass I, T = J W
    T, cov3d = aux["T"], aux["cov3d"]
    d_T = (d_cov2d + np.swapaxes(d_cov2d, 1, 2)) @ T @ cov3d
    d_cov3d = np.swapaxes(T, 1, 2) @ d_cov2d @ T
    d_J = d_T @ W.T

    d_rot, d_log = covariance_3d_backward(aux, cloud.log_scales[src], d_cov3d)
    grads.rotations[src] = d_rot
    grads.log_scales[src] = d_log

    # mean2d = pi(pc), and J depends on pc as well
    pc, J = aux["pc"], aux["J"]
    x, y, z = pc[:, 0], pc[:, 1], pc[:, 2]
    d_pc = np.einsum("nij,ni->nj", J, d_means2d)
    inv_z2 = 1.0 / (z * z)
    inv_z3 = inv_z2 / z
    d_pc[:, 0] += d_J[:, 0, 2] * (-K.fx * inv_z2)
    d_pc[:, 1] += d_J[:, 1, 2] * (-K.fy * inv_z2)
    d_pc[:, 2] += (
        d_J[:, 0, 0] * (-K.fx * inv_z2)
        + d_J[:, 0, 2] * (2.0 * K.fx * x * inv_z3)
        + d_J[:, 1, 1] * (-K.fy * inv_z2)
        + d_J[:, 1, 2] * (2.0 * K.fy * y * inv_z3)
    )
    # pc = W p + t
    grads.positions[src] = d_pc @ W + d_offset
    return grads
