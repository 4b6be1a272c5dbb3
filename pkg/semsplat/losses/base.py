from typing import NamedTuple

import numpy as np

from semsplat.exceptions import ShapeMismatch


class LossResult(NamedTuple):
    """Scalar loss and its gradient with respect to the first input"""
    value: float
    grad: np.ndarray


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: shapes {a.shape} and {b.shape} differ", expected=b.shape, actual=a.shape)
