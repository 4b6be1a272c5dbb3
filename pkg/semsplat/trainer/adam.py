"""
Adam over named parameter groups: the six cloud attributes and the
decoder's weights and biases.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np

from semsplat.cloud.gaussians import ATTRIBUTES, GaussianCloud
from semsplat.config import LearningRates
from semsplat.decoder.mlp import SemanticDecoder
from semsplat.exceptions import ShapeMismatch
from semsplat.rasterizer.types import GradientBundle

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


def decoder_param_names(decoder: SemanticDecoder) -> List[str]:
    layers = range(len(decoder.weights))
    return [f"decoder.weight{i}" for i in layers] + [f"decoder.bias{i}" for i in layers]


def named_parameters(cloud: GaussianCloud, decoder: SemanticDecoder) -> Iterator[Tuple[str, np.ndarray]]:
    yield from cloud.arrays()
    yield from zip(decoder_param_names(decoder), decoder.parameters())


def named_gradients(grads: GradientBundle) -> Iterator[Tuple[str, np.ndarray]]:
    yield from grads.arrays()
    if grads.decoder is not None:
        names = [f"decoder.weight{i}" for i in range(len(grads.decoder.weights))]
        names += [f"decoder.bias{i}" for i in range(len(grads.decoder.biases))]
        yield from zip(names, grads.decoder.parameters())


@dataclass
class AdamState:
    """First / second moments per parameter group and the shared step counter"""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = EPSILON

    @classmethod
    def for_model(cls, cloud: GaussianCloud, decoder: SemanticDecoder) -> "AdamState":
        state = cls()
        for name, param in named_parameters(cloud, decoder):
            state.m[name] = np.zeros_like(param)
            state.v[name] = np.zeros_like(param)
        return state

    def check_shapes(self, cloud: GaussianCloud, decoder: SemanticDecoder) -> None:
        for name, param in named_parameters(cloud, decoder):
            if self.m[name].shape != param.shape or self.v[name].shape != param.shape:
                raise ShapeMismatch(
                    f"Adam moments for {name} have shape {self.m[name].shape}, parameter {param.shape}",
                    expected=param.shape, actual=self.m[name].shape,
                )

    def apply(
            self,
            cloud: GaussianCloud,
            decoder: SemanticDecoder,
            grads: GradientBundle,
            lr: Dict[str, float],
    ) -> None:
        """
        One in-place update of every group. A group whose rate is 0 keeps
        its parameters bitwise unchanged.
        """
        self.step += 1
        bc1 = 1.0 - self.beta1 ** self.step
        bc2 = 1.0 - self.beta2 ** self.step
        params = dict(named_parameters(cloud, decoder))
        for name, grad in named_gradients(grads):
            param = params[name]
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            rate = lr[name.split(".")[0]]
            if rate == 0.0:
                continue
            param -= (rate * (m / bc1) / (np.sqrt(v / bc2) + self.eps)).astype(param.dtype, copy=False)

    def remap(self, keep: np.ndarray, num_new: int) -> None:
        """
        After densify / prune: cloud rows ``keep`` survive in order, then
        ``num_new`` fresh rows with zero moments.
        """
        for name in ATTRIBUTES:
            for moments in (self.m, self.v):
                old = moments[name][keep]
                fresh = np.zeros((num_new,) + old.shape[1:], dtype=old.dtype)
                moments[name] = np.concatenate([old, fresh])


def learning_rates(rates: LearningRates, step: int, total_steps: int) -> Dict[str, float]:
    """Per-group rates at ``step``; positions decay exponentially to the final factor"""
    progress = min(step / total_steps, 1.0) if total_steps > 0 else 0.0
    out = {name: getattr(rates, name) for name in ATTRIBUTES}
    out["positions"] = rates.positions * rates.position_lr_final_factor ** progress
    out["decoder"] = rates.decoder
    return out
