"""
The Gaussian point cloud: storage, initialization, activations and the
3D covariance built from rotation and scale.

Parameters are stored unconstrained (quaternion, log-scale, opacity logit)
and activated with normalize / exp / sigmoid.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterator, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from semsplat.camera.geometry import quaternion_to_rotation
from semsplat.camera.types import SparsePoint
from semsplat.cloud.sh import num_coeffs, rgb_to_sh
from semsplat.exceptions import EmptyInput, ShapeMismatch

logger = logging.getLogger(__name__)

DEFAULT_FEATURE_DIM = 16
DEFAULT_SH_DEGREE = 2
MAX_POINTS = 300_000
INIT_OPACITY = 0.1
FEATURE_INIT_SCALE = 0.01
LOG_SCALE_MIN = -20.0
LOG_SCALE_MAX = 10.0

ATTRIBUTES = ("positions", "rotations", "log_scales", "opacity_logits", "sh_coeffs", "features")


@dataclass
class GaussianCloud:
    """
    Array-of-attributes point set.

    Attributes:
        positions: N x 3 means
        rotations: N x 4 quaternions (w, x, y, z), renormalized on use
        log_scales: N x 3
        opacity_logits: N x 1
        sh_coeffs: N x (D+1)^2 x 3 colour coefficients
        features: N x F semantic features
    """
    positions: np.ndarray
    rotations: np.ndarray
    log_scales: np.ndarray
    opacity_logits: np.ndarray
    sh_coeffs: np.ndarray
    features: np.ndarray
    sh_degree: int = DEFAULT_SH_DEGREE

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        n = self.positions.shape[0]
        expected = {
            "positions": (n, 3),
            "rotations": (n, 4),
            "log_scales": (n, 3),
            "opacity_logits": (n, 1),
            "sh_coeffs": (n, num_coeffs(self.sh_degree), 3),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeMismatch(f"{name} has shape {actual}, expected {shape}", expected=shape, actual=actual)
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ShapeMismatch(
                f"features has shape {self.features.shape}, expected ({n}, F)",
                expected=(n, "F"), actual=self.features.shape,
            )

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def num_points(self) -> int:
        return self.positions.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.positions.dtype

    def arrays(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name in ATTRIBUTES:
            yield name, getattr(self, name)

    def as_dict(self) -> Dict[str, np.ndarray]:
        return dict(self.arrays())

    def copy(self) -> "GaussianCloud":
        return GaussianCloud(**{name: arr.copy() for name, arr in self.arrays()}, sh_degree=self.sh_degree)

    def astype(self, dtype) -> "GaussianCloud":
        return GaussianCloud(
            **{name: arr.astype(dtype) for name, arr in self.arrays()}, sh_degree=self.sh_degree
        )

    def select(self, index: np.ndarray) -> "GaussianCloud":
        """Rows picked by a boolean mask or an index array, attributes kept aligned"""
        return GaussianCloud(**{name: arr[index] for name, arr in self.arrays()}, sh_degree=self.sh_degree)

    @staticmethod
    def concat(clouds: Sequence["GaussianCloud"]) -> "GaussianCloud":
        degrees = {c.sh_degree for c in clouds}
        if len(degrees) != 1:
            raise ShapeMismatch("cannot concatenate clouds with different SH degrees", actual=sorted(degrees))
        return GaussianCloud(
            **{name: np.concatenate([getattr(c, name) for c in clouds]) for name in ATTRIBUTES},
            sh_degree=degrees.pop(),
        )


def init_from_points(
        points: Sequence[SparsePoint],
        feature_dim: int = DEFAULT_FEATURE_DIM,
        seed: int = 0,
        sh_degree: int = DEFAULT_SH_DEGREE,
        dtype=np.float32,
) -> GaussianCloud:
    """
    Build the initial cloud from structure-from-motion points.

    Scales are isotropic, the mean distance to the 3 nearest neighbours;
    opacity starts at 0.1, rotations at identity and features uniform in
    [-0.01, 0.01] drawn from ``seed``.

    Raises:
        EmptyInput: no points
    """
    if len(points) == 0:
        raise EmptyInput("cannot initialize a cloud from zero points")

    positions = np.stack([p.position for p in points]).astype(np.float64)
    colors = np.stack([p.color for p in points]).astype(np.float64)
    n = positions.shape[0]

    mean_dist = _mean_neighbor_distance(positions, k=3)
    log_scale = np.log(np.maximum(mean_dist, np.exp(LOG_SCALE_MIN)))

    sh = np.zeros((n, num_coeffs(sh_degree), 3))
    sh[:, 0, :] = rgb_to_sh(colors)

    rotations = np.zeros((n, 4))
    rotations[:, 0] = 1.0

    rng = np.random.default_rng(seed)
    features = rng.uniform(-FEATURE_INIT_SCALE, FEATURE_INIT_SCALE, size=(n, feature_dim))

    cloud = GaussianCloud(
        positions=positions,
        rotations=rotations,
        log_scales=np.repeat(log_scale[:, None], 3, axis=1),
        opacity_logits=np.full((n, 1), _logit(INIT_OPACITY)),
        sh_coeffs=sh,
        features=features,
        sh_degree=sh_degree,
    ).astype(dtype)
    logger.info("initialized cloud with %d points (sh degree %d, %d features)", n, sh_degree, feature_dim)
    return cloud


def _logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


def _mean_neighbor_distance(positions: np.ndarray, k: int) -> np.ndarray:
    n = positions.shape[0]
    if n == 1:
        # a lone point has no neighbours; give it unit size
        return np.ones(1)
    kk = min(k, n - 1)
    dist, _ = cKDTree(positions).query(positions, k=kk + 1)
    dist = dist.reshape(n, kk + 1)[:, 1:]
    return dist.mean(axis=1)


def normalize_quaternions(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(unit quaternions, norms) for N x 4 raw quaternions"""
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / np.maximum(norm, 1e-12), norm


def clamp_log_scales(log_scales: np.ndarray) -> np.ndarray:
    return np.clip(log_scales, LOG_SCALE_MIN, LOG_SCALE_MAX)


def covariance_3d(rotation: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    """R diag(exp(2 log_scale)) R^T for one quaternion (renormalized) and log-scale"""
    q = np.asarray(rotation, dtype=np.float64)
    q = q / np.linalg.norm(q)
    R = quaternion_to_rotation(q)
    s2 = np.exp(2.0 * clamp_log_scales(np.asarray(log_scale, dtype=np.float64)))
    return (R * s2) @ R.T


def covariance_3d_batch(rotations: np.ndarray, log_scales: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Batched covariance with the intermediates the backward pass needs.

    Returns:
        dict with ``cov`` (N x 3 x 3), ``R``, ``M`` (= R S), ``scales``,
        ``q`` (unit quaternions), ``q_norm``
    """
    q, q_norm = normalize_quaternions(rotations)
    R = quaternion_to_rotation(q)
    scales = np.exp(clamp_log_scales(log_scales))
    M = R * scales[:, None, :]
    cov = M @ np.swapaxes(M, 1, 2)
    return {"cov": cov, "R": R, "M": M, "scales": scales, "q": q, "q_norm": q_norm}


def covariance_3d_backward(
        intermediates: Dict[str, np.ndarray],
        log_scales: np.ndarray,
        dL_dcov: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Chain dL/dSigma (N x 3 x 3) back to raw quaternions and log-scales.

    Returns:
        (dL/drotations N x 4, dL/dlog_scales N x 3)
    """
    R, M, scales = intermediates["R"], intermediates["M"], intermediates["scales"]
    q, q_norm = intermediates["q"], intermediates["q_norm"]

    # Sigma = M M^T
    dM = (dL_dcov + np.swapaxes(dL_dcov, 1, 2)) @ M
    # M = R diag(s)
    d_scales = np.sum(dM * R, axis=1)
    inside = (log_scales > LOG_SCALE_MIN) & (log_scales < LOG_SCALE_MAX)
    d_log_scales = np.where(inside, d_scales * scales, 0.0)
    dR = dM * scales[:, None, :]

    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    G = dR
    dw = 2 * (-z * G[:, 0, 1] + y * G[:, 0, 2] + z * G[:, 1, 0] - x * G[:, 1, 2] - y * G[:, 2, 0] + x * G[:, 2, 1])
    dx = 2 * (y * G[:, 0, 1] + z * G[:, 0, 2] + y * G[:, 1, 0] - 2 * x * G[:, 1, 1] - w * G[:, 1, 2]
              + z * G[:, 2, 0] + w * G[:, 2, 1] - 2 * x * G[:, 2, 2])
    dy = 2 * (-2 * y * G[:, 0, 0] + x * G[:, 0, 1] + w * G[:, 0, 2] + x * G[:, 1, 0] + z * G[:, 1, 2]
              - w * G[:, 2, 0] + z * G[:, 2, 1] - 2 * y * G[:, 2, 2])
    dz = 2 * (-2 * z * G[:, 0, 0] - w * G[:, 0, 1] + x * G[:, 0, 2] + w * G[:, 1, 0] - 2 * z * G[:, 1, 1]
              + y * G[:, 1, 2] + x * G[:, 2, 0] + y * G[:, 2, 1])
    dq = np.stack([dw, dx, dy, dz], axis=-1)

    # q = q_raw / |q_raw|
    d_raw = (dq - q * np.sum(dq * q, axis=-1, keepdims=True)) / np.maximum(q_norm, 1e-12)
    return d_raw.astype(log_scales.dtype, copy=False), d_log_scales.astype(log_scales.dtype, copy=False)


@dataclass(frozen=True)
class Activated:
    """Constrained views of the stored parameters"""
    opacity: np.ndarray
    scale: np.ndarray


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def activate(cloud: GaussianCloud) -> Activated:
    """opacity = sigmoid(logit) in (0, 1); scale = exp(clamp(log_scale, -20, 10))"""
    return Activated(
        opacity=sigmoid(cloud.opacity_logits),
        scale=np.exp(clamp_log_scales(cloud.log_scales)),
    )
