"""
L1 and D-SSIM image losses with analytic gradients.

SSIM uses an 11 x 11 Gaussian window (sigma 1.5) applied separably with
zero padding, C1 = 0.01^2 and C2 = 0.03^2 for a data range of 1. The
structural term is computed per channel and averaged over every pixel
and channel; D-SSIM = (1 - SSIM) / 2.
"""
from functools import lru_cache
from typing import Dict

import numpy as np
from scipy.ndimage import correlate1d

from semsplat.exceptions import ImageTooSmall
from semsplat.losses.base import LossResult, check_same_shape

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
K1 = 0.01
K2 = 0.03
DATA_RANGE = 1.0


def l1_loss(rendered: np.ndarray, target: np.ndarray) -> LossResult:
    """Mean absolute difference; the subgradient is 0 at exact ties"""
    check_same_shape(rendered, target, "l1_loss")
    diff = rendered - target
    return LossResult(float(np.mean(np.abs(diff))), (np.sign(diff) / diff.size).astype(rendered.dtype))


@lru_cache(maxsize=8)
def gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    """Normalized 1D Gaussian taps"""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    w /= w.sum()
    w.setflags(write=False)
    return w


def _filter(img: np.ndarray, window: np.ndarray) -> np.ndarray:
    # separable, zero padded, output the same size as the input
    out = correlate1d(img, window, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, window, axis=1, mode="constant", cval=0.0)


def _ssim_terms(x: np.ndarray, y: np.ndarray) -> Dict[str, np.ndarray]:
    window = gaussian_window().astype(x.dtype)
    c1 = (K1 * DATA_RANGE) ** 2
    c2 = (K2 * DATA_RANGE) ** 2
    mu_x, mu_y = _filter(x, window), _filter(y, window)
    sxx = _filter(x * x, window) - mu_x * mu_x
    syy = _filter(y * y, window) - mu_y * mu_y
    sxy = _filter(x * y, window) - mu_x * mu_y
    a1 = 2.0 * mu_x * mu_y + c1
    a2 = 2.0 * sxy + c2
    b1 = mu_x * mu_x + mu_y * mu_y + c1
    b2 = sxx + syy + c2
    return {
        "window": window, "mu_x": mu_x, "mu_y": mu_y,
        "a1": a1, "a2": a2, "b1": b1, "b2": b2,
        "ssim": (a1 * a2) / (b1 * b2),
    }


def _check_size(img: np.ndarray) -> None:
    h, w = img.shape[:2]
    if h < WINDOW_SIZE or w < WINDOW_SIZE:
        raise ImageTooSmall(h, w, WINDOW_SIZE)


def ssim_map(rendered: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Per-pixel, per-channel SSIM of H x W (x C) images"""
    check_same_shape(rendered, target, "ssim")
    _check_size(rendered)
    return _ssim_terms(rendered, target)["ssim"]


def dssim_loss(rendered: np.ndarray, target: np.ndarray) -> LossResult:
    """
    (1 - mean SSIM) / 2 and its gradient with respect to ``rendered``.

    Raises:
        ShapeMismatch: shapes differ
        ImageTooSmall: a side is shorter than the window
    """
    check_same_shape(rendered, target, "dssim_loss")
    _check_size(rendered)
    x, y = rendered, target
    t = _ssim_terms(x, y)
    s = t["ssim"]
    value = 0.5 * (1.0 - float(np.mean(s)))

    a1, a2, b1, b2 = t["a1"], t["a2"], t["b1"], t["b2"]
    mu_x, mu_y = t["mu_x"], t["mu_y"]
    dL_ds = -0.5 / s.size

    # S as a function of (mu_x, sigma_xx, sigma_xy)
    ds_dmu = 2.0 * mu_y * a2 / (b1 * b2) - 2.0 * mu_x * s / b1
    ds_dsxx = -s / b2
    ds_dsxy = 2.0 * a1 / (b1 * b2)

    # back to the filtered raw moments W*x, W*(x^2), W*(xy)
    g_mx = dL_ds * (ds_dmu - 2.0 * mu_x * ds_dsxx - mu_y * ds_dsxy)
    g_exx = dL_ds * ds_dsxx
    g_exy = dL_ds * ds_dsxy

    # the symmetric zero-padded window is its own adjoint
    window = t["window"]
    grad = _filter(g_mx, window) + 2.0 * x * _filter(g_exx, window) + y * _filter(g_exy, window)
    return LossResult(value, grad.astype(x.dtype, copy=False))
